#pragma once
// Test-side reference implementations. Written directly from the formulas
// with plain loops; they share no code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;  // row-major, Mat[r][c]

inline Vec softmax(const Vec& x) {
  Vec e(x.size());
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    e[i] = std::exp(x[i]);
    s += e[i];
  }
  for (double& v : e) v /= s;
  return e;
}

inline Vec layer_norm(const Vec& x, const Vec& gain, const Vec& bias, double eps) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(x.size());
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean) / std::sqrt(var + eps) * gain[i] + bias[i];
  return out;
}

inline Vec standardize(const Vec& x, double eps = 1e-5) {
  return layer_norm(x, Vec(x.size(), 1.0), Vec(x.size(), 0.0), eps);
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline Mat matmul(const Mat& a, const Mat& b) {
  Mat out(a.size(), Vec(b[0].size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b[0].size(); ++j)
      for (std::size_t k = 0; k < b.size(); ++k) out[i][j] += a[i][k] * b[k][j];
  return out;
}

inline Mat transpose(const Mat& a) {
  Mat out(a[0].size(), Vec(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[0].size(); ++j) out[j][i] = a[i][j];
  return out;
}

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline Vec matvec(const Mat& m, const Vec& x) {
  Vec out(m.size(), 0.0);
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = dot(m[i], x);
  return out;
}

// Sample at output index i of a 1-D signal resized in -> out.
// Upsizing: bilinear with half-pixel centres, clamped at the edges.
// Downsizing: mean of the in/out source cells covering the output cell.
inline double resample_1d(const Vec& src, std::size_t out, std::size_t i) {
  const std::size_t in = src.size();
  if (in == out) return src[i];
  if (out < in) {
    const std::size_t f = in / out;
    double s = 0.0;
    for (std::size_t k = 0; k < f; ++k) s += src[i * f + k];
    return s / static_cast<double>(f);
  }
  double x = (static_cast<double>(i) + 0.5) * static_cast<double>(in) / static_cast<double>(out) - 0.5;
  x = std::clamp(x, 0.0, static_cast<double>(in - 1));
  const auto x0 = static_cast<std::size_t>(std::floor(x));
  const std::size_t x1 = std::min(x0 + 1, in - 1);
  const double t = x - static_cast<double>(x0);
  return src[x0] * (1.0 - t) + src[x1] * t;
}

// C x H x W -> C x oh x ow, rows first then columns.
inline std::vector<double> resample_map(const std::vector<double>& m, std::size_t c, std::size_t h, std::size_t w,
                                        std::size_t oh, std::size_t ow) {
  std::vector<double> tmp(c * oh * w), out(c * oh * ow);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t x = 0; x < w; ++x) {
      Vec col(h);
      for (std::size_t y = 0; y < h; ++y) col[y] = m[(ch * h + y) * w + x];
      for (std::size_t y = 0; y < oh; ++y) tmp[(ch * oh + y) * w + x] = resample_1d(col, oh, y);
    }
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < oh; ++y) {
      Vec row(w);
      for (std::size_t x = 0; x < w; ++x) row[x] = tmp[(ch * oh + y) * w + x];
      for (std::size_t x = 0; x < ow; ++x) out[(ch * oh + y) * ow + x] = resample_1d(row, ow, x);
    }
  return out;
}

struct Attention {
  Mat omega;  // A x R
  Mat k;      // A x D
};

// v is R x D, p is A x D, w1 is D x D; score(a, r) = p_a^T W1 v_r.
inline Attention spatial_attention(const Mat& p, const Mat& v, const Mat& w1) {
  Attention out;
  for (const Vec& pa : p) {
    Vec scores;
    for (const Vec& vr : v) scores.push_back(dot(pa, matvec(w1, vr)));
    Vec om = softmax(scores);
    Vec k(v[0].size(), 0.0);
    for (std::size_t r = 0; r < v.size(); ++r)
      for (std::size_t d = 0; d < k.size(); ++d) k[d] += om[r] * v[r][d];
    out.omega.push_back(om);
    out.k.push_back(k);
  }
  return out;
}

inline Mat channel_descriptor(const Mat& p, const Mat& v) {
  Vec pooled(v[0].size(), 0.0);
  for (const Vec& vr : v)
    for (std::size_t d = 0; d < pooled.size(); ++d) pooled[d] += vr[d] / static_cast<double>(v.size());
  const Vec nv = standardize(pooled);
  Mat q;
  for (const Vec& pa : p) {
    Vec np = standardize(pa);
    for (std::size_t d = 0; d < np.size(); ++d) np[d] += nv[d];
    q.push_back(np);
  }
  return q;
}

inline Mat channel_gate(const Mat& q, const Mat& w2, const Mat& w3) {
  Mat out;
  for (const Vec& qa : q) {
    Vec hidden = matvec(w2, qa);
    for (double& x : hidden) x = std::max(0.0, x);
    Vec eta = matvec(w3, hidden);
    for (double& x : eta) x = sigmoid(x);
    out.push_back(eta);
  }
  return out;
}

struct SitWeights {
  Mat wq, wk, wv, wo;  // D x D, input-major (y = x W)
  Vec bq, bk, bv, bo;
  Mat w1, w2;  // D x F, F x D
  Vec b1, b2;
  Vec g1, c1, g2, c2;
};

inline Mat affine(const Mat& x, const Mat& w, const Vec& b) {
  Mat y = matmul(x, w);
  for (Vec& row : y)
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += b[j];
  return y;
}

inline Mat mhsa(const Mat& x, const SitWeights& w, std::size_t heads) {
  const std::size_t s = x.size(), d = x[0].size(), dh = d / heads;
  const Mat q = affine(x, w.wq, w.bq), k = affine(x, w.wk, w.bk), v = affine(x, w.wv, w.bv);
  Mat cat(s, Vec(d, 0.0));
  for (std::size_t h = 0; h < heads; ++h)
    for (std::size_t i = 0; i < s; ++i) {
      Vec sc(s);
      for (std::size_t j = 0; j < s; ++j) {
        double t = 0.0;
        for (std::size_t c = h * dh; c < (h + 1) * dh; ++c) t += q[i][c] * k[j][c];
        sc[j] = t / std::sqrt(static_cast<double>(dh));
      }
      const Vec a = softmax(sc);
      for (std::size_t j = 0; j < s; ++j)
        for (std::size_t c = h * dh; c < (h + 1) * dh; ++c) cat[i][c] += a[j] * v[j][c];
    }
  return affine(cat, w.wo, w.bo);
}

inline Mat encoder_layer(const Mat& x, const SitWeights& w, std::size_t heads) {
  const Mat att = mhsa(x, w, heads);
  Mat h1;
  for (std::size_t i = 0; i < x.size(); ++i) {
    Vec r(x[i].size());
    for (std::size_t d = 0; d < r.size(); ++d) r[d] = att[i][d] + x[i][d];
    h1.push_back(layer_norm(r, w.g1, w.c1, 1e-5));
  }
  Mat hidden = affine(h1, w.w1, w.b1);
  for (Vec& row : hidden)
    for (double& v : row) v = std::max(0.0, v);
  const Mat mlp = affine(hidden, w.w2, w.b2);
  Mat out;
  for (std::size_t i = 0; i < x.size(); ++i) {
    Vec r(x[i].size());
    for (std::size_t d = 0; d < r.size(); ++d) r[d] = mlp[i][d] + h1[i][d];
    out.push_back(layer_norm(r, w.g2, w.c2, 1e-5));
  }
  return out;
}

inline double cosine(const Vec& a, const Vec& b) { return dot(a, b) / std::sqrt(dot(a, a) * dot(b, b)); }

// Attribute-branch loss for one batch, evaluated term by term.
inline double loss_ac(const Mat& o, const std::vector<std::uint32_t>& labels, const std::vector<std::uint32_t>& seen,
                      const std::vector<std::uint32_t>& unseen, double lambda_sc) {
  double t1 = 0.0, t2 = 0.0;
  for (std::size_t i = 0; i < o.size(); ++i) {
    double zs = 0.0;
    for (auto c : seen) zs += std::exp(o[i][c]);
    t1 += -std::log(std::exp(o[i][labels[i]]) / zs);
    double za = 0.0;
    for (std::size_t c = 0; c < o[i].size(); ++c) {
      const bool u = std::find(unseen.begin(), unseen.end(), c) != unseen.end();
      za += std::exp(o[i][c] + (u ? 1.0 : 0.0));
    }
    for (auto u : unseen) t2 += std::log(std::exp(o[i][u] + 1.0) / za);
  }
  const double n = static_cast<double>(o.size());
  return t1 / n - lambda_sc * t2 / n;
}

inline double loss_gc(const Mat& g, const std::vector<std::uint32_t>& labels) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double z = 0.0;
    for (double v : g[i]) z += std::exp(v);
    s += -std::log(std::exp(g[i][labels[i]]) / z);
  }
  return s / static_cast<double>(g.size());
}

// Two-stage ensemble written out step by step.
inline std::uint32_t ensemble(const Vec& o, const Vec& g, const std::vector<bool>& is_unseen, double beta) {
  std::uint32_t y1 = 0;
  double best = -INFINITY;
  for (std::uint32_t c = 0; c < o.size(); ++c) {
    const double s = o[c] + (is_unseen[c] ? 1.0 : 0.0);
    if (s > best) {
      best = s;
      y1 = c;
    }
  }
  if (is_unseen[y1]) return y1;
  const Vec po = softmax(o), pg = softmax(g);
  std::uint32_t y = 0;
  best = -INFINITY;
  for (std::uint32_t c = 0; c < o.size(); ++c) {
    const double s = beta * po[c] + (1.0 - beta) * pg[c];
    if (s > best) {
      best = s;
      y = c;
    }
  }
  return y;
}

inline std::uint32_t restricted_argmax(const Vec& o, const std::vector<std::uint32_t>& classes) {
  std::uint32_t best = classes[0];
  for (auto c : classes)
    if (o[c] > o[best] || (o[c] == o[best] && c < best)) best = c;
  return best;
}

inline double per_class_top1(const std::vector<std::uint32_t>& preds, const std::vector<std::uint32_t>& labels,
                             const std::vector<std::uint32_t>& classes) {
  double acc = 0.0;
  for (auto c : classes) {
    int n = 0, hit = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == c) {
        ++n;
        if (preds[i] == c) ++hit;
      }
    acc += static_cast<double>(hit) / n;
  }
  return acc / static_cast<double>(classes.size());
}

}  // namespace oracle
