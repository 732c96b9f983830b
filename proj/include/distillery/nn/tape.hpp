#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "distillery/nn/tensor.hpp"

namespace distillery::nn {

// Reverse-mode tape over vector-valued nodes. Each fused op pushes one node
// (LSTM steps push two) carrying a hand-derived backward closure; closures
// accumulate into upstream node grads and directly into Tensor::g so that
// gradients from many examples add up until the optimizer consumes them.
// grad_check.hpp holds the finite-difference oracle these closures are
// validated against.
template <class S>
class Tape {
 public:
  using Vec = std::vector<S>;

  struct Node {
    Vec val;
    Vec grad;
    std::function<void(Tape&, int)> back;
  };

  int input(Vec v) { return push(std::move(v)); }

  const Vec& value(int id) const { return nodes_[id].val; }
  const Vec& grad(int id) const { return nodes_[id].grad; }
  std::size_t size() const { return nodes_.size(); }

  void reset() { nodes_.clear(); }

  // Seeds the scalar root with `seed` (1 by default; a 1/token_count seed
  // gives per-token-normalized batch gradients without touching the loss value).
  void backward(int root, S seed = S(1)) {
    if (nodes_[static_cast<std::size_t>(root)].val.size() != 1)
      throw UsageError("backward: root must be scalar");
    for (auto& n : nodes_) n.grad.assign(n.val.size(), S(0));
    nodes_[static_cast<std::size_t>(root)].grad[0] = seed;
    for (int id = root; id >= 0; --id) {
      auto& n = nodes_[static_cast<std::size_t>(id)];
      if (n.back) n.back(*this, id);
    }
  }

  int lookup(Tensor<S>& table, std::size_t row) {
    const std::size_t d = table.cols();
    if (row >= table.rows())
      throw UsageError("lookup: row " + std::to_string(row) + " out of range in " + table.name);
    Vec out(table.v.begin() + row * d, table.v.begin() + (row + 1) * d);
    int id = push(std::move(out));
    nodes_[id].back = [&table, row, d](Tape& t, int self) {
      const Vec& g = t.nodes_[self].grad;
      for (std::size_t j = 0; j < d; ++j) table.g[row * d + j] += g[j];
    };
    return id;
  }

  // y = W x + b, W row-major [rows x cols].
  int affine(Tensor<S>& W, Tensor<S>& b, int x) {
    const std::size_t R = W.rows(), C = W.cols();
    const Vec& xv = nodes_[x].val;
    if (xv.size() != C || b.size() != R)
      throw ConfigError("affine: dimension mismatch in " + W.name);
    Vec out(R);
    for (std::size_t r = 0; r < R; ++r) {
      S s = b.v[r];
      const S* wr = W.v.data() + r * C;
      for (std::size_t c = 0; c < C; ++c) s += wr[c] * xv[c];
      out[r] = s;
    }
    int id = push(std::move(out));
    nodes_[id].back = [&W, &b, x, R, C](Tape& t, int self) {
      const Vec& g = t.nodes_[self].grad;
      const Vec& xv = t.nodes_[x].val;
      Vec& xg = t.nodes_[x].grad;
      for (std::size_t r = 0; r < R; ++r) {
        const S gr = g[r];
        if (gr == S(0)) continue;
        b.g[r] += gr;
        S* wgr = W.g.data() + r * C;
        const S* wr = W.v.data() + r * C;
        for (std::size_t c = 0; c < C; ++c) {
          wgr[c] += gr * xv[c];
          xg[c] += gr * wr[c];
        }
      }
    };
    return id;
  }

  // y = M x (no bias); used for score vectors against a row-stacked matrix.
  int matvec(Tensor<S>& M, int x) {
    const std::size_t R = M.rows(), C = M.cols();
    const Vec& xv = nodes_[x].val;
    if (xv.size() != C) throw ConfigError("matvec: dimension mismatch in " + M.name);
    Vec out(R);
    for (std::size_t r = 0; r < R; ++r) {
      S s = S(0);
      const S* mr = M.v.data() + r * C;
      for (std::size_t c = 0; c < C; ++c) s += mr[c] * xv[c];
      out[r] = s;
    }
    int id = push(std::move(out));
    nodes_[id].back = [&M, x, R, C](Tape& t, int self) {
      const Vec& g = t.nodes_[self].grad;
      const Vec& xv = t.nodes_[x].val;
      Vec& xg = t.nodes_[x].grad;
      for (std::size_t r = 0; r < R; ++r) {
        const S gr = g[r];
        if (gr == S(0)) continue;
        S* mgr = M.g.data() + r * C;
        const S* mr = M.v.data() + r * C;
        for (std::size_t c = 0; c < C; ++c) {
          mgr[c] += gr * xv[c];
          xg[c] += gr * mr[c];
        }
      }
    };
    return id;
  }

  int add(int a, int b) {
    const Vec& av = nodes_[a].val;
    const Vec& bv = nodes_[b].val;
    if (av.size() != bv.size()) throw ConfigError("add: size mismatch");
    Vec out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
    int id = push(std::move(out));
    nodes_[id].back = [a, b](Tape& t, int self) {
      const Vec& g = t.nodes_[self].grad;
      for (std::size_t i = 0; i < g.size(); ++i) {
        t.nodes_[a].grad[i] += g[i];
        t.nodes_[b].grad[i] += g[i];
      }
    };
    return id;
  }

  int scale(int x, S c) {
    Vec out = nodes_[x].val;
    for (auto& o : out) o *= c;
    int id = push(std::move(out));
    nodes_[id].back = [x, c](Tape& t, int self) {
      const Vec& g = t.nodes_[self].grad;
      for (std::size_t i = 0; i < g.size(); ++i) t.nodes_[x].grad[i] += c * g[i];
    };
    return id;
  }

  int concat(int a, int b) {
    Vec out = nodes_[a].val;
    out.insert(out.end(), nodes_[b].val.begin(), nodes_[b].val.end());
    int id = push(std::move(out));
    const std::size_t na = nodes_[a].val.size();
    nodes_[id].back = [a, b, na](Tape& t, int self) {
      const Vec& g = t.nodes_[self].grad;
      for (std::size_t i = 0; i < na; ++i) t.nodes_[a].grad[i] += g[i];
      for (std::size_t i = na; i < g.size(); ++i) t.nodes_[b].grad[i - na] += g[i];
    };
    return id;
  }

  int tanh_of(int x) {
    Vec out = nodes_[x].val;
    for (auto& o : out) o = std::tanh(o);
    int id = push(std::move(out));
    nodes_[id].back = [x](Tape& t, int self) {
      const Vec& g = t.nodes_[self].grad;
      const Vec& y = t.nodes_[self].val;
      for (std::size_t i = 0; i < g.size(); ++i)
        t.nodes_[x].grad[i] += g[i] * (S(1) - y[i] * y[i]);
    };
    return id;
  }

  int dot_of(int a, int b) {
    const Vec& av = nodes_[a].val;
    const Vec& bv = nodes_[b].val;
    if (av.size() != bv.size()) throw ConfigError("dot: size mismatch");
    S s = S(0);
    for (std::size_t i = 0; i < av.size(); ++i) s += av[i] * bv[i];
    int id = push(Vec{s});
    nodes_[id].back = [a, b](Tape& t, int self) {
      const S g = t.nodes_[self].grad[0];
      const Vec& av = t.nodes_[a].val;
      const Vec& bv = t.nodes_[b].val;
      for (std::size_t i = 0; i < av.size(); ++i) {
        t.nodes_[a].grad[i] += g * bv[i];
        t.nodes_[b].grad[i] += g * av[i];
      }
    };
    return id;
  }

  int sum(const std::vector<int>& xs) {
    S s = S(0);
    for (int x : xs) {
      if (nodes_[x].val.size() != 1) throw UsageError("sum: operands must be scalar");
      s += nodes_[x].val[0];
    }
    int id = push(Vec{s});
    nodes_[id].back = [xs](Tape& t, int self) {
      const S g = t.nodes_[self].grad[0];
      for (int x : xs) t.nodes_[x].grad[0] += g;
    };
    return id;
  }

  // One LSTM cell step; gate order i, f, g, o. Returns (h', c'). The combined
  // backward closure rides on the later-created c' node so it runs before
  // either input node's consumers are revisited.
  std::pair<int, int> lstm_step(Tensor<S>& Wih, Tensor<S>& Whh, Tensor<S>& bias, int x, int h,
                                int c) {
    const std::size_t E = Wih.cols();
    const std::size_t H = Whh.cols();
    if (Wih.rows() != 4 * H || Whh.rows() != 4 * H || bias.size() != 4 * H)
      throw ConfigError("lstm_step: gate block mismatch in " + Wih.name);
    const Vec& xv = nodes_[x].val;
    const Vec& hv = nodes_[h].val;
    const Vec& cv = nodes_[c].val;
    if (xv.size() != E || hv.size() != H || cv.size() != H)
      throw ConfigError("lstm_step: state dimension mismatch in " + Wih.name);

    Vec z(4 * H);
    for (std::size_t r = 0; r < 4 * H; ++r) {
      S s = bias.v[r];
      const S* wi = Wih.v.data() + r * E;
      for (std::size_t e = 0; e < E; ++e) s += wi[e] * xv[e];
      const S* wh = Whh.v.data() + r * H;
      for (std::size_t j = 0; j < H; ++j) s += wh[j] * hv[j];
      z[r] = s;
    }
    Vec gi(H), gf(H), gg(H), go(H), cn(H), tc(H), hn(H);
    auto sig = [](S v) { return S(1) / (S(1) + std::exp(-v)); };
    for (std::size_t j = 0; j < H; ++j) {
      gi[j] = sig(z[j]);
      gf[j] = sig(z[H + j]);
      gg[j] = std::tanh(z[2 * H + j]);
      go[j] = sig(z[3 * H + j]);
      cn[j] = gf[j] * cv[j] + gi[j] * gg[j];
      tc[j] = std::tanh(cn[j]);
      hn[j] = go[j] * tc[j];
    }
    int h_id = push(std::move(hn));
    int c_id = push(std::move(cn));
    nodes_[c_id].back = [&Wih, &Whh, &bias, x, h, c, h_id, E, H, gi = std::move(gi),
                         gf = std::move(gf), gg = std::move(gg), go = std::move(go),
                         tc = std::move(tc)](Tape& t, int self) {
      const Vec& dh = t.nodes_[h_id].grad;
      const Vec& dc_ext = t.nodes_[self].grad;
      const Vec& xv = t.nodes_[x].val;
      const Vec& hv = t.nodes_[h].val;
      const Vec& cv = t.nodes_[c].val;
      Vec dz(4 * H);
      for (std::size_t j = 0; j < H; ++j) {
        const S dhj = dh[j];
        const S dcj = dc_ext[j] + dhj * go[j] * (S(1) - tc[j] * tc[j]);
        const S di = dcj * gg[j];
        const S df = dcj * cv[j];
        const S dg = dcj * gi[j];
        const S do_ = dhj * tc[j];
        dz[j] = di * gi[j] * (S(1) - gi[j]);
        dz[H + j] = df * gf[j] * (S(1) - gf[j]);
        dz[2 * H + j] = dg * (S(1) - gg[j] * gg[j]);
        dz[3 * H + j] = do_ * go[j] * (S(1) - go[j]);
        t.nodes_[c].grad[j] += dcj * gf[j];
      }
      for (std::size_t r = 0; r < 4 * H; ++r) {
        const S dzr = dz[r];
        if (dzr == S(0)) continue;
        bias.g[r] += dzr;
        S* wig = Wih.g.data() + r * E;
        const S* wi = Wih.v.data() + r * E;
        for (std::size_t e = 0; e < E; ++e) {
          wig[e] += dzr * xv[e];
          t.nodes_[x].grad[e] += dzr * wi[e];
        }
        S* whg = Whh.g.data() + r * H;
        const S* wh = Whh.v.data() + r * H;
        for (std::size_t j = 0; j < H; ++j) {
          whg[j] += dzr * hv[j];
          t.nodes_[h].grad[j] += dzr * wh[j];
        }
      }
    };
    return {h_id, c_id};
  }

  // Dot-score attention: a = softmax(enc_j . dec), out = sum_j a_j enc_j.
  int attention(int dec, const std::vector<int>& enc) {
    if (enc.empty()) throw UsageError("attention: no encoder states");
    const Vec& dv = nodes_[dec].val;
    const std::size_t H = dv.size();
    std::vector<double> scores(enc.size());
    for (std::size_t j = 0; j < enc.size(); ++j) {
      const Vec& ev = nodes_[enc[j]].val;
      if (ev.size() != H) throw ConfigError("attention: state dimension mismatch");
      double s = 0.0;
      for (std::size_t i = 0; i < H; ++i) s += static_cast<double>(ev[i]) * static_cast<double>(dv[i]);
      scores[j] = s;
    }
    std::vector<double> a = softmax(scores);
    Vec out(H, S(0));
    for (std::size_t j = 0; j < enc.size(); ++j) {
      const Vec& ev = nodes_[enc[j]].val;
      for (std::size_t i = 0; i < H; ++i) out[i] += static_cast<S>(a[j]) * ev[i];
    }
    int id = push(std::move(out));
    nodes_[id].back = [dec, enc, H, a = std::move(a)](Tape& t, int self) {
      const Vec& g = t.nodes_[self].grad;
      const Vec& dv = t.nodes_[dec].val;
      std::vector<double> da(enc.size());
      double adat = 0.0;
      for (std::size_t j = 0; j < enc.size(); ++j) {
        const Vec& ev = t.nodes_[enc[j]].val;
        double s = 0.0;
        for (std::size_t i = 0; i < H; ++i) s += static_cast<double>(ev[i]) * static_cast<double>(g[i]);
        da[j] = s;
        adat += a[j] * s;
      }
      for (std::size_t j = 0; j < enc.size(); ++j) {
        const double ds = a[j] * (da[j] - adat);
        const Vec& ev = t.nodes_[enc[j]].val;
        Vec& eg = t.nodes_[enc[j]].grad;
        for (std::size_t i = 0; i < H; ++i) {
          eg[i] += static_cast<S>(a[j]) * g[i] + static_cast<S>(ds) * dv[i];
          t.nodes_[dec].grad[i] += static_cast<S>(ds) * ev[i];
        }
      }
    };
    return id;
  }

  // loss = -log softmax(W h + b)[target], fused for the output projection.
  int softmax_xent(Tensor<S>& W, Tensor<S>& b, int h, std::size_t target) {
    const std::size_t V = W.rows(), H = W.cols();
    const Vec& hv = nodes_[h].val;
    if (hv.size() != H || b.size() != V || target >= V)
      throw ConfigError("softmax_xent: dimension mismatch in " + W.name);
    std::vector<double> u(V);
    for (std::size_t k = 0; k < V; ++k) {
      double s = static_cast<double>(b.v[k]);
      const S* wr = W.v.data() + k * H;
      for (std::size_t i = 0; i < H; ++i) s += static_cast<double>(wr[i]) * static_cast<double>(hv[i]);
      u[k] = s;
    }
    const double lse = log_sum_exp(u);
    std::vector<double> p(V);
    for (std::size_t k = 0; k < V; ++k) p[k] = std::exp(u[k] - lse);
    int id = push(Vec{static_cast<S>(lse - u[target])});
    nodes_[id].back = [&W, &b, h, target, V, H, p = std::move(p)](Tape& t, int self) {
      const S g = t.nodes_[self].grad[0];
      if (g == S(0)) return;
      const Vec& hv = t.nodes_[h].val;
      Vec& hg = t.nodes_[h].grad;
      for (std::size_t k = 0; k < V; ++k) {
        const S d = g * static_cast<S>(p[k] - (k == target ? 1.0 : 0.0));
        b.g[k] += d;
        S* wg = W.g.data() + k * H;
        const S* wr = W.v.data() + k * H;
        for (std::size_t i = 0; i < H; ++i) {
          wg[i] += d * hv[i];
          hg[i] += d * wr[i];
        }
      }
    };
    return id;
  }

  // log softmax(logits)[index] as a scalar node.
  int log_softmax_pick(int logits, std::size_t index) {
    const Vec& lv = nodes_[logits].val;
    if (index >= lv.size()) throw UsageError("log_softmax_pick: index out of range");
    std::vector<double> u(lv.begin(), lv.end());
    const double lse = log_sum_exp(u);
    std::vector<double> p(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) p[k] = std::exp(u[k] - lse);
    int id = push(Vec{static_cast<S>(u[index] - lse)});
    nodes_[id].back = [logits, index, p = std::move(p)](Tape& t, int self) {
      const S g = t.nodes_[self].grad[0];
      Vec& lg = t.nodes_[logits].grad;
      for (std::size_t k = 0; k < p.size(); ++k)
        lg[k] += g * static_cast<S>((k == index ? 1.0 : 0.0) - p[k]);
    };
    return id;
  }

  // Binary cross-entropy on a single logit, numerically stable form.
  int bce_logit(int z, int label) {
    if (nodes_[z].val.size() != 1) throw UsageError("bce_logit: logit must be scalar");
    const double zv = static_cast<double>(nodes_[z].val[0]);
    const double y = label ? 1.0 : 0.0;
    const double loss = std::max(zv, 0.0) - zv * y + std::log1p(std::exp(-std::abs(zv)));
    int id = push(Vec{static_cast<S>(loss)});
    nodes_[id].back = [z, y](Tape& t, int self) {
      const S g = t.nodes_[self].grad[0];
      const double zv = static_cast<double>(t.nodes_[z].val[0]);
      const double sz = 1.0 / (1.0 + std::exp(-zv));
      t.nodes_[z].grad[0] += g * static_cast<S>(sz - y);
    };
    return id;
  }

  int squared_error(int x, S target) {
    if (nodes_[x].val.size() != 1) throw UsageError("squared_error: operand must be scalar");
    const S d = nodes_[x].val[0] - target;
    int id = push(Vec{d * d});
    nodes_[id].back = [x, target](Tape& t, int self) {
      const S g = t.nodes_[self].grad[0];
      t.nodes_[x].grad[0] += g * S(2) * (t.nodes_[x].val[0] - target);
    };
    return id;
  }

 private:
  std::vector<Node> nodes_;

  int push(Vec v) {
    nodes_.push_back(Node{std::move(v), {}, {}});
    return static_cast<int>(nodes_.size()) - 1;
  }
};

}  // namespace distillery::nn
