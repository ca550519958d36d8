#include "hp1/spline_basis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>

#include "hp1/errors.hpp"

namespace hp1 {

namespace {

__extension__ typedef __int128 int128;

// Exact rational; denominators stay below (q+1)! so 128-bit intermediates suffice.
struct Rational {
  int128 num = 0;
  int128 den = 1;

  static int128 gcd(int128 a, int128 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
      int128 t = a % b;
      a = b;
      b = t;
    }
    return a;
  }

  static Rational make(int128 n, int128 d) {
    if (d < 0) {
      n = -n;
      d = -d;
    }
    int128 g = gcd(n, d);
    if (g > 1) {
      n /= g;
      d /= g;
    }
    return {n, d};
  }

  friend Rational operator+(Rational a, Rational b) {
    return make(a.num * b.den + b.num * a.den, a.den * b.den);
  }
  friend Rational operator*(Rational a, Rational b) { return make(a.num * b.num, a.den * b.den); }

  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
};

using Poly = std::vector<Rational>;  // lowest power first

// p * (c0 + c1*xi)
Poly mul_linear(const Poly& p, Rational c0, Rational c1) {
  Poly out(p.size() + 1);
  for (std::size_t k = 0; k < p.size(); ++k) {
    out[k] = out[k] + p[k] * c0;
    out[k + 1] = out[k + 1] + p[k] * c1;
  }
  return out;
}

Poly add(const Poly& a, const Poly& b) {
  Poly out(std::max(a.size(), b.size()));
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = out[k] + a[k];
  for (std::size_t k = 0; k < b.size(); ++k) out[k] = out[k] + b[k];
  return out;
}

// Cox-de Boor recursion carried out on the polynomial pieces:
//   N_d(t) = t/d N_{d-1}(t) + (d+1-t)/d N_{d-1}(t-1),
// with t = s + xi on piece s, so N_{d-1}(t-1) is piece s-1 at the same xi.
std::vector<Poly> bspline_pieces(int degree) {
  std::vector<Poly> pieces{Poly{Rational{1, 1}}};
  for (int d = 1; d <= degree; ++d) {
    std::vector<Poly> next(d + 1);
    const Rational inv_d = Rational::make(1, d);
    for (int s = 0; s <= d; ++s) {
      Poly acc(d + 1);
      if (s < d) {
        acc = add(acc, mul_linear(pieces[s], Rational::make(s, d), inv_d));
      }
      if (s > 0) {
        acc = add(acc, mul_linear(pieces[s - 1], Rational::make(d + 1 - s, d),
                                  Rational::make(-1, d)));
      }
      acc.resize(d + 1);
      next[s] = std::move(acc);
    }
    pieces = std::move(next);
  }
  return pieces;
}

}  // namespace

PPSplineBasis::PPSplineBasis(int degree) : degree_(degree) {
  if (degree < 0 || degree > kMaxSplineDegree) {
    throw_invalid("spline degree " + std::to_string(degree) + " outside [0, " +
                  std::to_string(kMaxSplineDegree) + "]");
  }
  const int q = degree;
  const int nb = q + 1;
  const std::vector<Poly> pieces = bspline_pieces(q);

  basis_.assign(static_cast<std::size_t>(nb * nb), 0.0);
  primitive_.assign(static_cast<std::size_t>(nb * (nb + 1)), 0.0);
  segment_.assign(static_cast<std::size_t>(nb * nb), 0.0);
  full_cell_.assign(static_cast<std::size_t>(nb), 0.0);

  std::vector<Rational> offset(nb);  // integral of pieces 0..s-1
  std::vector<Poly> local_prim(nb);  // xi^1..xi^(q+1) coefficients
  Rational running{0, 1};
  for (int s = 0; s < nb; ++s) {
    offset[s] = running;
    Poly qs(nb);
    Rational full{0, 1};
    for (int k = 0; k < nb; ++k) {
      qs[k] = pieces[s][k] * Rational::make(1, k + 1);
      full = full + qs[k];
    }
    local_prim[s] = std::move(qs);
    running = running + full;
  }

  for (int r = 0; r < nb; ++r) {
    const int s = q - r;
    double* brow = basis_.data() + r * nb;
    double* prow = primitive_.data() + r * (nb + 1);
    double* srow = segment_.data() + r * nb;
    for (int k = 0; k < nb; ++k) {
      brow[k] = pieces[s][q - k].to_double();
      prow[k] = local_prim[s][q - k].to_double();
      srow[k] = local_prim[s][k].to_double();
    }
    prow[nb] = offset[s].to_double();
    Rational full{0, 1};
    for (int k = 0; k < nb; ++k) full = full + local_prim[s][k];
    full_cell_[r] = full.to_double();
  }
}

std::span<const double> PPSplineBasis::basis_coeffs(int r) const {
  if (r < 0 || r > degree_) throw_invalid("basis row out of range");
  return {basis_.data() + r * n_basis(), static_cast<std::size_t>(n_basis())};
}

std::span<const double> PPSplineBasis::primitive_coeffs(int r) const {
  if (r < 0 || r > degree_) throw_invalid("basis row out of range");
  return {primitive_.data() + r * (n_basis() + 1), static_cast<std::size_t>(n_basis() + 1)};
}

void PPSplineBasis::eval_basis_into(double xi, std::span<double> out) const noexcept {
  const int nb = n_basis();
  for (int r = 0; r < nb; ++r) {
    const double* c = basis_.data() + r * nb;
    double v = c[0];
    for (int k = 1; k < nb; ++k) v = v * xi + c[k];
    // Horner rounding can leave a value a few ulps outside [0, 1] near the support ends.
    out[r] = std::clamp(v, 0.0, 1.0);
  }
}

void PPSplineBasis::eval_primitive_into(double xi, std::span<double> out) const noexcept {
  const int nb = n_basis();
  out[0] = 1.0;
  for (int r = 0; r < nb; ++r) {
    const double* c = primitive_.data() + r * (nb + 1);
    double v = c[0];
    for (int k = 1; k <= nb; ++k) v = v * xi + c[k];
    out[r + 1] = v;
  }
}

void PPSplineBasis::integrate_segment_into(double a, double len, std::span<double> out,
                                           std::span<double> work) const noexcept {
  // (Q(b) - Q(a)) / (b - a) = sum_k e_k h_{k-1}(a, b), with h_m the complete
  // homogeneous polynomial of degree m in (a, b).
  const int nb = n_basis();
  const double b = a + len;
  double apow = 1.0;
  work[0] = 1.0;
  for (int m = 1; m < nb; ++m) {
    apow *= a;
    work[m] = b * work[m - 1] + apow;
  }
  for (int r = 0; r < nb; ++r) {
    const double* e = segment_.data() + r * nb;
    double acc = 0.0;
    for (int k = 0; k < nb; ++k) acc += e[k] * work[k];
    out[r] = len * acc;
  }
}

PPSplineBasis pp_coefficients(int degree) { return PPSplineBasis(degree); }

namespace {
void check_xi(double xi) {
  if (!(xi >= 0.0 && xi < 1.0)) {
    throw_invalid("normalized cell position " + std::to_string(xi) + " outside [0, 1)");
  }
}
}  // namespace

std::vector<double> eval_basis(const PPSplineBasis& basis, double xi) {
  check_xi(xi);
  std::vector<double> out(static_cast<std::size_t>(basis.n_basis()));
  basis.eval_basis_into(xi, out);
  return out;
}

std::vector<double> eval_primitive(const PPSplineBasis& basis, double xi) {
  check_xi(xi);
  std::vector<double> out(static_cast<std::size_t>(basis.n_basis() + 1));
  basis.eval_primitive_into(xi, out);
  return out;
}

}  // namespace hp1
