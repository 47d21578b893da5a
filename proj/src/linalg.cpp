#include "drmn/linalg.hpp"

#include <string>

#include "drmn/error.hpp"

namespace drmn::linalg {

namespace {
void check_inner(std::size_t a, std::size_t b, const char* what, const Tensor& x, const Tensor& y) {
  if (a != b) {
    fail(Errc::shape, std::string(what) + ": inner dimensions differ " + shape_str(x.shape()) +
                          " vs " + shape_str(y.shape()));
  }
}
}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  check_inner(k, b.rows(), "matmul", a, b);
  Tensor c = Tensor::matrix(n, m);
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    double* ci = pc + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = pa[i * k + p];
      if (aip == 0.0) continue;
      const double* bp = pb + p * m;
      for (std::size_t j = 0; j < m; ++j) ci[j] += aip * bp[j];
    }
  }
  return c;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
  check_inner(k, b.cols(), "matmul_nt", a, b);
  Tensor c = Tensor::matrix(n, m);
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = pa + i * k;
    for (std::size_t j = 0; j < m; ++j) {
      const double* bj = pb + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      pc[i * m + j] = s;
    }
  }
  return c;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  check_inner(n, b.rows(), "matmul_tn", a, b);
  Tensor c = Tensor::matrix(k, m);
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    const double* bi = pb + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = pa[i * k + p];
      if (aip == 0.0) continue;
      double* cp = pc + p * m;
      for (std::size_t j = 0; j < m; ++j) cp[j] += aip * bi[j];
    }
  }
  return c;
}

Tensor transpose(const Tensor& a) {
  const std::size_t n = a.rows(), m = a.cols();
  Tensor t = Tensor::matrix(m, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) t.at(j, i) = a.at(i, j);
  return t;
}

}  // namespace drmn::linalg
