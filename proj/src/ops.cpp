#include "drmn/ops.hpp"

#include <cmath>
#include <string>

#include "drmn/error.hpp"
#include "drmn/linalg.hpp"

namespace drmn::ops {

namespace {

std::size_t block_height(const Tensor& x, std::size_t blocks, const char* what) {
  if (blocks == 0 || x.rows() % blocks != 0) {
    fail(Errc::shape, std::string(what) + ": " + std::to_string(x.rows()) +
                          " rows do not split into " + std::to_string(blocks) + " blocks");
  }
  return x.rows() / blocks;
}

Tensor as_matrix(const Tensor& x) { return x.rank() == 2 ? x : x.reshaped({x.rows(), x.cols()}); }

}  // namespace

Var add(Tape& t, Var a, Var b) {
  const Tensor& x = t.value(a);
  const Tensor& y = t.value(b);
  require_same_shape(x, y, "add");
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += y[i];
  return t.push("add", std::move(out), {a, b}, [a, b](Tape& tp, const Tensor&, const Tensor& g) {
    tp.accumulate(a, g);
    tp.accumulate(b, g);
  });
}

Var sub(Tape& t, Var a, Var b) {
  const Tensor& x = t.value(a);
  const Tensor& y = t.value(b);
  require_same_shape(x, y, "sub");
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= y[i];
  return t.push("sub", std::move(out), {a, b}, [a, b](Tape& tp, const Tensor&, const Tensor& g) {
    tp.accumulate(a, g);
    if (tp.requires_grad(b)) {
      Tensor ng = g;
      for (auto& v : ng.storage()) v = -v;
      tp.accumulate(b, ng);
    }
  });
}

Var mul(Tape& t, Var a, Var b) {
  const Tensor& x = t.value(a);
  const Tensor& y = t.value(b);
  require_same_shape(x, y, "mul");
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= y[i];
  return t.push("mul", std::move(out), {a, b}, [a, b](Tape& tp, const Tensor&, const Tensor& g) {
    if (tp.requires_grad(a)) {
      Tensor ga = g;
      const Tensor& y = tp.value(b);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= y[i];
      tp.accumulate(a, ga);
    }
    if (tp.requires_grad(b)) {
      Tensor gb = g;
      const Tensor& x = tp.value(a);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] *= x[i];
      tp.accumulate(b, gb);
    }
  });
}

Var scale(Tape& t, Var a, double s) {
  Tensor out = t.value(a);
  for (auto& v : out.storage()) v *= s;
  return t.push("scale", std::move(out), {a}, [a, s](Tape& tp, const Tensor&, const Tensor& g) {
    Tensor ga = g;
    for (auto& v : ga.storage()) v *= s;
    tp.accumulate(a, ga);
  });
}

Var linear_combination(Tape& t, const std::vector<Var>& xs, const std::vector<double>& ws) {
  if (xs.empty() || xs.size() != ws.size()) {
    fail(Errc::shape, "linear_combination: need equally many (>0) terms and weights");
  }
  Tensor out(t.value(xs[0]).shape(), 0.0);
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const Tensor& x = t.value(xs[k]);
    require_same_shape(out, x, "linear_combination");
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += ws[k] * x[i];
  }
  return t.push("linear_combination", std::move(out), xs,
                [xs, ws](Tape& tp, const Tensor&, const Tensor& g) {
                  for (std::size_t k = 0; k < xs.size(); ++k) {
                    if (!tp.requires_grad(xs[k])) continue;
                    Tensor gk = g;
                    for (auto& v : gk.storage()) v *= ws[k];
                    tp.accumulate(xs[k], gk);
                  }
                });
}

Var add_row_bias(Tape& t, Var x, Var b) {
  const Tensor& xv = t.value(x);
  const Tensor& bv = t.value(b);
  const std::size_t n = xv.rows(), d = xv.cols();
  if (bv.size() != d) {
    fail(Errc::shape, "add_row_bias: bias has " + std::to_string(bv.size()) + " entries, rows have " +
                          std::to_string(d));
  }
  Tensor out = as_matrix(xv);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) out.at(i, j) += bv[j];
  return t.push("add_row_bias", std::move(out), {x, b},
                [x, b, n, d](Tape& tp, const Tensor&, const Tensor& g) {
                  tp.accumulate(x, g);
                  if (tp.requires_grad(b)) {
                    Tensor& gb = tp.grad_buffer(b);
                    for (std::size_t i = 0; i < n; ++i)
                      for (std::size_t j = 0; j < d; ++j) gb[j] += g[i * d + j];
                  }
                });
}

Var matmul(Tape& t, Var a, Var b) {
  Tensor out = linalg::matmul(t.value(a), t.value(b));
  return t.push("matmul", std::move(out), {a, b}, [a, b](Tape& tp, const Tensor&, const Tensor& g) {
    if (tp.requires_grad(a)) tp.accumulate(a, linalg::matmul_nt(g, tp.value(b)));
    if (tp.requires_grad(b)) tp.accumulate(b, linalg::matmul_tn(as_matrix(tp.value(a)), g));
  });
}

Var matmul_nt(Tape& t, Var a, Var b) {
  Tensor out = linalg::matmul_nt(t.value(a), t.value(b));
  return t.push("matmul_nt", std::move(out), {a, b},
                [a, b](Tape& tp, const Tensor&, const Tensor& g) {
                  if (tp.requires_grad(a)) tp.accumulate(a, linalg::matmul(g, tp.value(b)));
                  if (tp.requires_grad(b)) tp.accumulate(b, linalg::matmul_tn(g, as_matrix(tp.value(a))));
                });
}

Var softmax_rows(Tape& t, Var x) {
  Tensor out = as_matrix(t.value(x));
  for (std::size_t i = 0; i < out.rows(); ++i) softmax_inplace(out.row(i));
  return t.push("softmax_rows", std::move(out), {x}, [x](Tape& tp, const Tensor& y, const Tensor& g) {
    Tensor gx(y.shape(), 0.0);
    const std::size_t n = y.rows(), d = y.cols();
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < d; ++j) dot += g[i * d + j] * y[i * d + j];
      for (std::size_t j = 0; j < d; ++j) gx[i * d + j] = y[i * d + j] * (g[i * d + j] - dot);
    }
    tp.accumulate(x, gx);
  });
}

namespace {

struct RowStats {
  std::vector<double> mean, inv_std;
};

RowStats row_stats(const Tensor& x, double eps) {
  const std::size_t n = x.rows(), d = x.cols();
  RowStats s{std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    auto r = x.row(i);
    double mean = 0.0;
    for (double v : r) mean += v;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (double v : r) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    s.mean[i] = mean;
    s.inv_std[i] = 1.0 / std::sqrt(var + eps);
  }
  return s;
}

// Gradient wrt x of xhat = (x - mean) * inv_std given d(loss)/d(xhat) rows.
Tensor normalize_backward(const Tensor& x, const Tensor& gxhat, double eps) {
  const std::size_t n = x.rows(), d = x.cols();
  const RowStats s = row_stats(x, eps);
  Tensor gx(x.shape(), 0.0);
  const double dn = static_cast<double>(d);
  for (std::size_t i = 0; i < n; ++i) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double xhat = (x[i * d + j] - s.mean[i]) * s.inv_std[i];
      sum_g += gxhat[i * d + j];
      sum_gx += gxhat[i * d + j] * xhat;
    }
    for (std::size_t j = 0; j < d; ++j) {
      const double xhat = (x[i * d + j] - s.mean[i]) * s.inv_std[i];
      gx[i * d + j] = s.inv_std[i] / dn * (dn * gxhat[i * d + j] - sum_g - xhat * sum_gx);
    }
  }
  return gx;
}

}  // namespace

Var layer_norm_rows(Tape& t, Var x, Var gain, Var bias, double eps) {
  const Tensor& xv = t.value(x);
  const Tensor& gv = t.value(gain);
  const Tensor& bv = t.value(bias);
  Tensor out = as_matrix(xv);
  const std::size_t n = out.rows(), d = out.cols();
  for (std::size_t i = 0; i < n; ++i) {
    auto y = layer_norm(xv.row(i), gv.data(), bv.data(), eps);
    std::copy(y.begin(), y.end(), out.row(i).begin());
  }
  return t.push("layer_norm_rows", std::move(out), {x, gain, bias},
                [x, gain, bias, eps, n, d](Tape& tp, const Tensor&, const Tensor& g) {
                  const Tensor xm = as_matrix(tp.value(x));
                  const Tensor& gv = tp.value(gain);
                  const RowStats s = row_stats(xm, eps);
                  if (tp.requires_grad(gain) || tp.requires_grad(bias)) {
                    Tensor gg(gv.shape(), 0.0), gb(gv.shape(), 0.0);
                    for (std::size_t i = 0; i < n; ++i)
                      for (std::size_t j = 0; j < d; ++j) {
                        const double xhat = (xm[i * d + j] - s.mean[i]) * s.inv_std[i];
                        gg[j] += g[i * d + j] * xhat;
                        gb[j] += g[i * d + j];
                      }
                    tp.accumulate(gain, gg);
                    tp.accumulate(bias, gb);
                  }
                  if (tp.requires_grad(x)) {
                    Tensor gxhat(xm.shape(), 0.0);
                    for (std::size_t i = 0; i < n; ++i)
                      for (std::size_t j = 0; j < d; ++j) gxhat[i * d + j] = g[i * d + j] * gv[j];
                    tp.accumulate(x, normalize_backward(xm, gxhat, eps));
                  }
                });
}

Var standardize_rows(Tape& t, Var x, double eps) {
  const Tensor& xv = t.value(x);
  Tensor out = as_matrix(xv);
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto y = standardize(xv.row(i), eps);
    std::copy(y.begin(), y.end(), out.row(i).begin());
  }
  return t.push("standardize_rows", std::move(out), {x},
                [x, eps](Tape& tp, const Tensor&, const Tensor& g) {
                  tp.accumulate(x, normalize_backward(as_matrix(tp.value(x)), g, eps));
                });
}

Var sigmoid(Tape& t, Var x) {
  Tensor out = t.value(x);
  for (auto& v : out.storage()) v = drmn::sigmoid(v);
  return t.push("sigmoid", std::move(out), {x}, [x](Tape& tp, const Tensor& y, const Tensor& g) {
    Tensor gx = g;
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] *= y[i] * (1.0 - y[i]);
    tp.accumulate(x, gx);
  });
}

Var relu(Tape& t, Var x) {
  Tensor out = t.value(x);
  for (auto& v : out.storage()) v = v > 0.0 ? v : 0.0;
  return t.push("relu", std::move(out), {x}, [x](Tape& tp, const Tensor&, const Tensor& g) {
    Tensor gx = g;
    const Tensor& xv = tp.value(x);
    for (std::size_t i = 0; i < gx.size(); ++i)
      if (!(xv[i] > 0.0)) gx[i] = 0.0;
    tp.accumulate(x, gx);
  });
}

Var l2_normalize_rows(Tape& t, Var x) {
  Tensor out = as_matrix(t.value(x));
  const std::size_t n = out.rows(), d = out.cols();
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (double v : out.row(i)) s += v * v;
    norms[i] = std::sqrt(s);
    if (!(norms[i] > 0.0)) {
      fail(Errc::degenerate_score, "l2 normalisation of a zero vector (row " + std::to_string(i) + ")");
    }
    for (double& v : out.row(i)) v /= norms[i];
  }
  return t.push("l2_normalize_rows", std::move(out), {x},
                [x, norms, n, d](Tape& tp, const Tensor& y, const Tensor& g) {
                  Tensor gx(y.shape(), 0.0);
                  for (std::size_t i = 0; i < n; ++i) {
                    double dot = 0.0;
                    for (std::size_t j = 0; j < d; ++j) dot += y[i * d + j] * g[i * d + j];
                    for (std::size_t j = 0; j < d; ++j)
                      gx[i * d + j] = (g[i * d + j] - y[i * d + j] * dot) / norms[i];
                  }
                  tp.accumulate(x, gx);
                });
}

Var block_transpose(Tape& t, Var x, std::size_t blocks) {
  const Tensor& xv = t.value(x);
  const std::size_t r = block_height(xv, blocks, "block_transpose");
  const std::size_t c = xv.cols();
  Tensor out = Tensor::matrix(blocks * c, r);
  for (std::size_t b = 0; b < blocks; ++b)
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) out.at(b * c + j, i) = xv.at(b * r + i, j);
  return t.push("block_transpose", std::move(out), {x},
                [x, blocks, r, c](Tape& tp, const Tensor&, const Tensor& g) {
                  Tensor gx = Tensor::matrix(blocks * r, c);
                  for (std::size_t b = 0; b < blocks; ++b)
                    for (std::size_t i = 0; i < r; ++i)
                      for (std::size_t j = 0; j < c; ++j)
                        gx.at(b * r + i, j) = g[(b * c + j) * r + i];
                  tp.accumulate(x, gx);
                });
}

Var block_matmul(Tape& t, Var w, Var v, std::size_t blocks) {
  const Tensor& wv = t.value(w);
  const Tensor& vv = t.value(v);
  const std::size_t a = block_height(wv, blocks, "block_matmul");
  const std::size_t r = block_height(vv, blocks, "block_matmul");
  if (wv.cols() != r) {
    fail(Errc::shape, "block_matmul: block widths " + std::to_string(wv.cols()) + " vs heights " +
                          std::to_string(r));
  }
  const std::size_t d = vv.cols();
  Tensor out = Tensor::matrix(blocks * a, d);
  for (std::size_t b = 0; b < blocks; ++b)
    for (std::size_t i = 0; i < a; ++i) {
      double* o = &out.at(b * a + i, 0);
      for (std::size_t k = 0; k < r; ++k) {
        const double wik = wv.at(b * a + i, k);
        const double* vk = vv.row(b * r + k).data();
        for (std::size_t j = 0; j < d; ++j) o[j] += wik * vk[j];
      }
    }
  return t.push("block_matmul", std::move(out), {w, v},
                [w, v, blocks, a, r, d](Tape& tp, const Tensor&, const Tensor& g) {
                  const Tensor& wv = tp.value(w);
                  const Tensor& vv = tp.value(v);
                  if (tp.requires_grad(w)) {
                    Tensor gw = Tensor::matrix(blocks * a, r);
                    for (std::size_t b = 0; b < blocks; ++b)
                      for (std::size_t i = 0; i < a; ++i)
                        for (std::size_t k = 0; k < r; ++k) {
                          double s = 0.0;
                          for (std::size_t j = 0; j < d; ++j)
                            s += g[(b * a + i) * d + j] * vv.at(b * r + k, j);
                          gw.at(b * a + i, k) = s;
                        }
                    tp.accumulate(w, gw);
                  }
                  if (tp.requires_grad(v)) {
                    Tensor gv = Tensor::matrix(blocks * r, d);
                    for (std::size_t b = 0; b < blocks; ++b)
                      for (std::size_t i = 0; i < a; ++i)
                        for (std::size_t k = 0; k < r; ++k) {
                          const double wik = wv.at(b * a + i, k);
                          for (std::size_t j = 0; j < d; ++j)
                            gv.at(b * r + k, j) += wik * g[(b * a + i) * d + j];
                        }
                    tp.accumulate(v, gv);
                  }
                });
}

Var block_mean_rows(Tape& t, Var x, std::size_t blocks) {
  const Tensor& xv = t.value(x);
  const std::size_t r = block_height(xv, blocks, "block_mean_rows");
  const std::size_t d = xv.cols();
  Tensor out = Tensor::matrix(blocks, d);
  for (std::size_t b = 0; b < blocks; ++b) {
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < d; ++j) out.at(b, j) += xv.at(b * r + i, j);
    for (std::size_t j = 0; j < d; ++j) out.at(b, j) /= static_cast<double>(r);
  }
  return t.push("block_mean_rows", std::move(out), {x},
                [x, blocks, r, d](Tape& tp, const Tensor&, const Tensor& g) {
                  Tensor gx = Tensor::matrix(blocks * r, d);
                  for (std::size_t b = 0; b < blocks; ++b)
                    for (std::size_t i = 0; i < r; ++i)
                      for (std::size_t j = 0; j < d; ++j)
                        gx.at(b * r + i, j) = g[b * d + j] / static_cast<double>(r);
                  tp.accumulate(x, gx);
                });
}

Var outer_add_rows(Tape& t, Var x, Var y) {
  const Tensor& xv = t.value(x);
  const Tensor& yv = t.value(y);
  const std::size_t nb = xv.rows(), na = yv.rows(), d = xv.cols();
  if (yv.cols() != d) fail(Errc::shape, "outer_add_rows: row widths differ");
  Tensor out = Tensor::matrix(nb * na, d);
  for (std::size_t b = 0; b < nb; ++b)
    for (std::size_t a = 0; a < na; ++a)
      for (std::size_t j = 0; j < d; ++j) out.at(b * na + a, j) = xv.at(b, j) + yv.at(a, j);
  return t.push("outer_add_rows", std::move(out), {x, y},
                [x, y, nb, na, d](Tape& tp, const Tensor&, const Tensor& g) {
                  Tensor gx = Tensor::matrix(nb, d), gy = Tensor::matrix(na, d);
                  for (std::size_t b = 0; b < nb; ++b)
                    for (std::size_t a = 0; a < na; ++a)
                      for (std::size_t j = 0; j < d; ++j) {
                        gx.at(b, j) += g[(b * na + a) * d + j];
                        gy.at(a, j) += g[(b * na + a) * d + j];
                      }
                  tp.accumulate(x, gx);
                  tp.accumulate(y, gy);
                });
}

Var tile_rows(Tape& t, Var x, std::size_t times) {
  if (times == 0) fail(Errc::shape, "tile_rows: times must be positive");
  const Tensor xm = as_matrix(t.value(x));
  const std::size_t n = xm.rows(), d = xm.cols();
  Tensor out = Tensor::matrix(times * n, d);
  for (std::size_t k = 0; k < times; ++k)
    std::copy(xm.data().begin(), xm.data().end(), out.data().begin() + k * n * d);
  return t.push("tile_rows", std::move(out), {x}, [x, times, n, d](Tape& tp, const Tensor&, const Tensor& g) {
    Tensor gx(tp.value(x).shape(), 0.0);
    for (std::size_t k = 0; k < times; ++k)
      for (std::size_t i = 0; i < n * d; ++i) gx[i] += g[k * n * d + i];
    tp.accumulate(x, gx);
  });
}

Var row_sum(Tape& t, Var x) {
  const Tensor xm = as_matrix(t.value(x));
  const std::size_t n = xm.rows(), d = xm.cols();
  Tensor out = Tensor::matrix(n, 1);
  for (std::size_t i = 0; i < n; ++i)
    for (double v : xm.row(i)) out[i] += v;
  return t.push("row_sum", std::move(out), {x}, [x, n, d](Tape& tp, const Tensor&, const Tensor& g) {
    Tensor gx(tp.value(x).shape(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) gx[i * d + j] = g[i];
    tp.accumulate(x, gx);
  });
}

Var mean_all(Tape& t, Var x) {
  const Tensor& xv = t.value(x);
  double s = 0.0;
  for (double v : xv.data()) s += v;
  const double n = static_cast<double>(xv.size());
  Tensor out({1}, s / n);
  return t.push("mean_all", std::move(out), {x}, [x, n](Tape& tp, const Tensor&, const Tensor& g) {
    tp.accumulate(x, Tensor(tp.value(x).shape(), g[0] / n));
  });
}

Var reshape(Tape& t, Var x, Shape shape) {
  Tensor out = t.value(x).reshaped(std::move(shape));
  return t.push("reshape", std::move(out), {x}, [x](Tape& tp, const Tensor&, const Tensor& g) {
    tp.accumulate(x, g.reshaped(tp.value(x).shape()));
  });
}

Var slice_cols(Tape& t, Var x, std::size_t begin, std::size_t end) {
  const Tensor xm = as_matrix(t.value(x));
  const std::size_t n = xm.rows(), d = xm.cols();
  if (begin >= end || end > d) fail(Errc::shape, "slice_cols: bad column range");
  const std::size_t w = end - begin;
  Tensor out = Tensor::matrix(n, w);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < w; ++j) out.at(i, j) = xm.at(i, begin + j);
  return t.push("slice_cols", std::move(out), {x},
                [x, begin, n, d, w](Tape& tp, const Tensor&, const Tensor& g) {
                  Tensor& gx = tp.grad_buffer(x);
                  for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < w; ++j) gx[i * d + begin + j] += g[i * w + j];
                });
}

Var concat_cols(Tape& t, const std::vector<Var>& xs) {
  if (xs.empty()) fail(Errc::empty_input, "concat_cols of nothing");
  const std::size_t n = t.value(xs[0]).rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (Var x : xs) {
    if (t.value(x).rows() != n) fail(Errc::shape, "concat_cols: row counts differ");
    widths.push_back(t.value(x).cols());
    total += widths.back();
  }
  Tensor out = Tensor::matrix(n, total);
  std::size_t off = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const Tensor& xv = t.value(xs[k]);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < widths[k]; ++j) out.at(i, off + j) = xv[i * widths[k] + j];
    off += widths[k];
  }
  return t.push("concat_cols", std::move(out), xs,
                [xs, widths, n, total](Tape& tp, const Tensor&, const Tensor& g) {
                  std::size_t off = 0;
                  for (std::size_t k = 0; k < xs.size(); ++k) {
                    if (tp.requires_grad(xs[k])) {
                      Tensor gk(tp.value(xs[k]).shape(), 0.0);
                      for (std::size_t i = 0; i < n; ++i)
                        for (std::size_t j = 0; j < widths[k]; ++j)
                          gk[i * widths[k] + j] = g[i * total + off + j];
                      tp.accumulate(xs[k], gk);
                    }
                    off += widths[k];
                  }
                });
}

}  // namespace drmn::ops
