#include "vidpred/core/autograd.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <unordered_set>

namespace vidpred::ag {

namespace {
std::atomic<int64_t> g_next_id{1};

Var make_node(Tensor value, std::vector<Var> parents,
              std::function<void(Node&)> backward_fn) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->id = g_next_id.fetch_add(1);
  for (const auto& p : parents)
    if (p->requires_grad) {
      n->requires_grad = true;
      break;
    }
  if (n->requires_grad) {
    n->parents = std::move(parents);
    n->backward_fn = std::move(backward_fn);
  }
  return n;
}
}  // namespace

Var leaf(Tensor value, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  n->id = g_next_id.fetch_add(1);
  return n;
}

void accumulate(Node& n, const Tensor& g) {
  if (!n.requires_grad) return;
  if (!n.has_grad) {
    n.grad = Tensor(n.value.shape());
    n.has_grad = true;
  }
  n.grad.add_(g);
}

void backward(const Var& root) {
  if (root->value.size() != 1)
    throw std::invalid_argument("backward: root must be scalar");
  // Topological order by creation id (parents always have smaller ids).
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<Node*> stack{root.get()};
  seen.insert(root.get());
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (const auto& p : n->parents)
      if (p->requires_grad && seen.insert(p.get()).second) stack.push_back(p.get());
  }
  std::sort(order.begin(), order.end(),
            [](Node* a, Node* b) { return a->id > b->id; });
  accumulate(*root, Tensor({1}, 1.0));
  for (Node* n : order)
    if (n->backward_fn && n->has_grad) n->backward_fn(*n);
}

Var conv3d(const Var& x, const Var& w, const Var& b, const nn::Stride3& stride,
           const nn::Pad3& pad) {
  Tensor y = nn::conv3d_forward(x->value, w->value, b ? b->value : Tensor{},
                                stride, pad);
  std::vector<Var> parents = b ? std::vector<Var>{x, w, b} : std::vector<Var>{x, w};
  Node* xp = x.get();
  Node* wp = w.get();
  Node* bp = b ? b.get() : nullptr;
  return make_node(std::move(y), std::move(parents), [=](Node& self) {
    if (xp->requires_grad)
      accumulate(*xp, nn::conv3d_backward_input(self.grad, wp->value,
                                                xp->value.shape(), stride, pad));
    if (wp->requires_grad)
      accumulate(*wp, nn::conv3d_backward_weight(self.grad, xp->value,
                                                 wp->value.shape(), stride, pad));
    if (bp && bp->requires_grad)
      accumulate(*bp, nn::conv3d_backward_bias(self.grad));
  });
}

Var batch_norm(const Var& x, const Var& gamma, const Var& beta, bool training,
               Tensor* running_mean, Tensor* running_var, double momentum,
               double eps) {
  const int64_t C = x->value.dim(1);
  if (gamma->value.size() != C || beta->value.size() != C)
    throw std::invalid_argument("batch_norm: parameter size mismatch");

  nn::BnStats stats;
  if (training) {
    stats = nn::bn_batch_stats(x->value, eps);
    if (running_mean && running_var) {
      const int64_t M =
          x->value.dim(0) * x->value.dim(2) * x->value.dim(3) * x->value.dim(4);
      const double unbias = M > 1 ? static_cast<double>(M) / (M - 1) : 1.0;
      for (int64_t c = 0; c < C; ++c) {
        const double var = 1.0 / (stats.invstd[c] * stats.invstd[c]) - eps;
        (*running_mean)[c] =
            (1.0 - momentum) * (*running_mean)[c] + momentum * stats.mean[c];
        (*running_var)[c] =
            (1.0 - momentum) * (*running_var)[c] + momentum * var * unbias;
      }
    }
  } else {
    if (!running_mean || !running_var)
      throw std::invalid_argument("batch_norm: eval mode needs running stats");
    stats.mean = *running_mean;
    stats.invstd = Tensor({C});
    for (int64_t c = 0; c < C; ++c)
      stats.invstd[c] = 1.0 / std::sqrt((*running_var)[c] + eps);
  }

  Tensor y = nn::bn_forward(x->value, gamma->value, beta->value, stats);
  Node* xp = x.get();
  Node* gp = gamma.get();
  Node* bp = beta.get();
  return make_node(std::move(y), {x, gamma, beta}, [=](Node& self) {
    if (training) {
      Tensor gg({gamma->value.size()});
      Tensor gb({beta->value.size()});
      Tensor gx = nn::bn_backward(self.grad, xp->value, gp->value, stats, gg, gb);
      if (xp->requires_grad) accumulate(*xp, gx);
      if (gp->requires_grad) accumulate(*gp, gg);
      if (bp->requires_grad) accumulate(*bp, gb);
    } else {
      // Fixed affine: y = a*x + b with a = gamma*invstd.
      const int64_t N = xp->value.dim(0), Cc = xp->value.dim(1);
      const int64_t inner =
          xp->value.dim(2) * xp->value.dim(3) * xp->value.dim(4);
      if (xp->requires_grad) {
        Tensor gx(xp->value.shape());
        for (int64_t n = 0; n < N; ++n)
          for (int64_t c = 0; c < Cc; ++c) {
            const double a = gp->value[c] * stats.invstd[c];
            const double* gr = self.grad.data() + (n * Cc + c) * inner;
            double* od = gx.data() + (n * Cc + c) * inner;
            for (int64_t i = 0; i < inner; ++i) od[i] = a * gr[i];
          }
        accumulate(*xp, gx);
      }
      if (gp->requires_grad || bp->requires_grad) {
        Tensor gg({Cc});
        Tensor gb({Cc});
        for (int64_t n = 0; n < N; ++n)
          for (int64_t c = 0; c < Cc; ++c) {
            const double* gr = self.grad.data() + (n * Cc + c) * inner;
            const double* xr = xp->value.data() + (n * Cc + c) * inner;
            for (int64_t i = 0; i < inner; ++i) {
              gg[c] += gr[i] * (xr[i] - stats.mean[c]) * stats.invstd[c];
              gb[c] += gr[i];
            }
          }
        if (gp->requires_grad) accumulate(*gp, gg);
        if (bp->requires_grad) accumulate(*bp, gb);
      }
    }
  });
}

Var relu(const Var& x) {
  Node* xp = x.get();
  return make_node(nn::relu_forward(x->value), {x}, [=](Node& self) {
    accumulate(*xp, nn::relu_backward(self.grad, xp->value));
  });
}

Var sigmoid(const Var& x) {
  Tensor y = nn::sigmoid_forward(x->value);
  Node* xp = x.get();
  return make_node(std::move(y), {x}, [=](Node& self) {
    accumulate(*xp, nn::sigmoid_backward(self.grad, self.value));
  });
}

Var abs(const Var& x) {
  Tensor y(x->value.shape());
  for (int64_t i = 0; i < y.size(); ++i) y[i] = std::fabs(x->value[i]);
  Node* xp = x.get();
  return make_node(std::move(y), {x}, [=](Node& self) {
    Tensor gx(xp->value.shape());
    for (int64_t i = 0; i < gx.size(); ++i) {
      const double v = xp->value[i];
      gx[i] = v > 0.0 ? self.grad[i] : (v < 0.0 ? -self.grad[i] : 0.0);
    }
    accumulate(*xp, gx);
  });
}

Var dropout(const Var& x, double rate, RngStream& rng, bool active) {
  if (!active || rate <= 0.0) return x;
  if (rate >= 1.0) throw std::invalid_argument("dropout: rate must be < 1");
  const double keep_scale = 1.0 / (1.0 - rate);
  auto mask = std::make_shared<Tensor>(x->value.shape());
  Tensor y(x->value.shape());
  for (int64_t i = 0; i < y.size(); ++i) {
    const double m = rng.bernoulli(rate) ? 0.0 : keep_scale;
    (*mask)[i] = m;
    y[i] = x->value[i] * m;
  }
  Node* xp = x.get();
  return make_node(std::move(y), {x}, [=](Node& self) {
    Tensor gx(xp->value.shape());
    for (int64_t i = 0; i < gx.size(); ++i) gx[i] = self.grad[i] * (*mask)[i];
    accumulate(*xp, gx);
  });
}

Var pixel_shuffle(const Var& x, nn::ShuffleMode mode, int64_t r) {
  Node* xp = x.get();
  return make_node(nn::pixel_shuffle(x->value, mode, r), {x}, [=](Node& self) {
    accumulate(*xp, nn::pixel_shuffle(self.grad, nn::shuffle_inverse(mode), r));
  });
}

Var avgpool_hw2(const Var& x) {
  Node* xp = x.get();
  return make_node(nn::avgpool_hw2_forward(x->value), {x}, [=](Node& self) {
    accumulate(*xp, nn::avgpool_hw2_backward(self.grad, xp->value.shape()));
  });
}

Var mean_t(const Var& x) {
  Node* xp = x.get();
  return make_node(nn::mean_t_forward(x->value), {x}, [=](Node& self) {
    accumulate(*xp, nn::mean_t_backward(self.grad, xp->value.shape()));
  });
}

Var concat(const Var& a, const Var& b, int axis) {
  Node* ap = a.get();
  Node* bp = b.get();
  const int64_t split = a->value.dim(axis);
  return make_node(nn::concat_axis(a->value, b->value, axis), {a, b},
                   [=](Node& self) {
                     if (ap->requires_grad)
                       accumulate(*ap, nn::slice_axis(self.grad, axis, 0, split));
                     if (bp->requires_grad)
                       accumulate(*bp, nn::slice_axis(self.grad, axis, split,
                                                      self.value.dim(axis)));
                   });
}

Var tail_t(const Var& x, int64_t t_out) {
  Node* xp = x.get();
  return make_node(nn::tail_t_forward(x->value, t_out), {x}, [=](Node& self) {
    accumulate(*xp, nn::tail_t_backward(self.grad, xp->value.shape()));
  });
}

Var site_normalize(const Var& x, double eps) {
  Node* xp = x.get();
  return make_node(nn::site_normalize_forward(x->value, eps), {x},
                   [=](Node& self) {
                     accumulate(*xp, nn::site_normalize_backward(self.grad,
                                                                 xp->value, eps));
                   });
}

Var sn_normalize(const Var& w, const Tensor& u, const Tensor& v) {
  const int64_t Co = w->value.dim(0);
  const int64_t K = w->value.size() / Co;
  Tensor wv({Co});
  nn::sn_mat_vec(w->value, v, wv);
  double sigma = 0.0;
  for (int64_t i = 0; i < Co; ++i) sigma += u[i] * wv[i];
  if (!(sigma > 0.0))
    throw std::runtime_error("sn_normalize: non-positive sigma estimate");

  Tensor y = w->value;
  y.scale_(1.0 / sigma);
  Node* wp = w.get();
  auto u_c = std::make_shared<Tensor>(u);
  auto v_c = std::make_shared<Tensor>(v);
  return make_node(std::move(y), {w}, [=](Node& self) {
    // d/dW of (W/sigma) with sigma = u^T W v and u,v constant:
    // g/sigma - (sum(g .* W_hat)/sigma) * u v^T
    double dot = 0.0;
    for (int64_t i = 0; i < self.grad.size(); ++i)
      dot += self.grad[i] * self.value[i];
    Tensor gw(wp->value.shape());
    const double inv_sigma = 1.0 / sigma;
    for (int64_t i = 0; i < Co; ++i) {
      const double coef = dot * inv_sigma * (*u_c)[i];
      double* row = gw.data() + i * K;
      const double* grow = self.grad.data() + i * K;
      const double* vd = v_c->data();
      for (int64_t k = 0; k < K; ++k)
        row[k] = grow[k] * inv_sigma - coef * vd[k];
    }
    accumulate(*wp, gw);
  });
}

Var add(const Var& a, const Var& b) {
  check_same_shape(a->value, b->value, "add");
  Tensor y = a->value;
  y.add_(b->value);
  Node* ap = a.get();
  Node* bp = b.get();
  return make_node(std::move(y), {a, b}, [=](Node& self) {
    if (ap->requires_grad) accumulate(*ap, self.grad);
    if (bp->requires_grad) accumulate(*bp, self.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  check_same_shape(a->value, b->value, "sub");
  Tensor y(a->value.shape());
  for (int64_t i = 0; i < y.size(); ++i) y[i] = a->value[i] - b->value[i];
  Node* ap = a.get();
  Node* bp = b.get();
  return make_node(std::move(y), {a, b}, [=](Node& self) {
    if (ap->requires_grad) accumulate(*ap, self.grad);
    if (bp->requires_grad) {
      Tensor g = self.grad;
      g.scale_(-1.0);
      accumulate(*bp, g);
    }
  });
}

Var mul(const Var& a, const Var& b) {
  check_same_shape(a->value, b->value, "mul");
  Tensor y(a->value.shape());
  for (int64_t i = 0; i < y.size(); ++i) y[i] = a->value[i] * b->value[i];
  Node* ap = a.get();
  Node* bp = b.get();
  return make_node(std::move(y), {a, b}, [=](Node& self) {
    if (ap->requires_grad) {
      Tensor g(self.grad.shape());
      for (int64_t i = 0; i < g.size(); ++i) g[i] = self.grad[i] * bp->value[i];
      accumulate(*ap, g);
    }
    if (bp->requires_grad) {
      Tensor g(self.grad.shape());
      for (int64_t i = 0; i < g.size(); ++i) g[i] = self.grad[i] * ap->value[i];
      accumulate(*bp, g);
    }
  });
}

Var affine(const Var& x, double a, double b) {
  Tensor y(x->value.shape());
  for (int64_t i = 0; i < y.size(); ++i) y[i] = a * x->value[i] + b;
  Node* xp = x.get();
  return make_node(std::move(y), {x}, [=](Node& self) {
    Tensor g = self.grad;
    g.scale_(a);
    accumulate(*xp, g);
  });
}

Var mean_all(const Var& x) {
  return sum_scaled(x, 1.0 / static_cast<double>(x->value.size()));
}

Var sum_scaled(const Var& x, double scale) {
  Tensor y({1});
  y[0] = x->value.sum() * scale;
  Node* xp = x.get();
  return make_node(std::move(y), {x}, [=](Node& self) {
    Tensor g(xp->value.shape(), self.grad[0] * scale);
    accumulate(*xp, g);
  });
}

Var weighted_sum(const std::vector<Var>& scalars,
                 const std::vector<double>& coeffs, double c0) {
  if (scalars.size() != coeffs.size())
    throw std::invalid_argument("weighted_sum: size mismatch");
  Tensor y({1});
  y[0] = c0;
  for (size_t i = 0; i < scalars.size(); ++i) {
    if (scalars[i]->value.size() != 1)
      throw std::invalid_argument("weighted_sum: operands must be scalars");
    y[0] += coeffs[i] * scalars[i]->value[0];
  }
  std::vector<Node*> ptrs;
  for (const auto& s : scalars) ptrs.push_back(s.get());
  return make_node(std::move(y), scalars, [=](Node& self) {
    for (size_t i = 0; i < ptrs.size(); ++i)
      if (ptrs[i]->requires_grad) {
        Tensor g({1}, self.grad[0] * coeffs[i]);
        accumulate(*ptrs[i], g);
      }
  });
}

}  // namespace vidpred::ag
