#include "mtbem/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace mtbem {

namespace {

constexpr double inv_four_pi = 0.25 * std::numbers::inv_pi;

void add_orbit3(TriangleRule& r, double a, double b, double w) {
  r.points.emplace_back(a, b, b);
  r.points.emplace_back(b, a, b);
  r.points.emplace_back(b, b, a);
  for (int i = 0; i < 3; ++i) r.weights.push_back(w);
}

std::string describe(const Corners& a, const Corners& b, PairRelation rel) {
  std::ostringstream os;
  os.precision(17);
  os << "quadrature breakdown on " << to_string(rel) << " pair: test [";
  for (const auto& p : a) os << " (" << p.transpose() << ")";
  os << " ] trial [";
  for (const auto& p : b) os << " (" << p.transpose() << ")";
  os << " ]";
  return os.str();
}

bool finite(cd z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

}  // namespace

LineRule gauss_legendre(int n) {
  if (n < 1) throw QuadratureError("Gauss-Legendre rule needs at least one point");
  // P_n(x) and P_n'(x) by the three-term recurrence.
  auto legendre = [n](double x) {
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    return std::pair{p1, n * (x * p1 - p0) / (x * x - 1.0)};
  };
  LineRule rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = legendre(x).second;
    const double w = 1.0 / ((1.0 - x * x) * dp * dp);
    rule.points[i] = 0.5 * (1.0 - x);
    rule.points[n - 1 - i] = 0.5 * (1.0 + x);
    rule.weights[i] = rule.weights[n - 1 - i] = w;
  }
  return rule;
}

TriangleRule collapsed_gauss_rule(int n) {
  const LineRule g = gauss_legendre(n);
  TriangleRule r;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double s = g.points[i];
      const double t = g.points[j] * (1.0 - s);
      r.points.emplace_back(1.0 - s - t, s, t);
      r.weights.push_back(2.0 * g.weights[i] * g.weights[j] * (1.0 - s));
    }
  }
  r.degree = 2 * n - 2;
  return r;
}

TriangleRule triangle_rule(int degree) {
  TriangleRule r;
  if (degree <= 1) {
    r.points.emplace_back(1.0 / 3, 1.0 / 3, 1.0 / 3);
    r.weights.push_back(1.0);
    r.degree = 1;
  } else if (degree == 2) {
    add_orbit3(r, 2.0 / 3, 1.0 / 6, 1.0 / 3);
    r.degree = 2;
  } else if (degree <= 4) {
    add_orbit3(r, 0.108103018168070, 0.445948490915965, 0.223381589678011);
    add_orbit3(r, 0.816847572980459, 0.091576213509771, 0.109951743655322);
    r.degree = 4;
  } else if (degree == 5) {
    r.points.emplace_back(1.0 / 3, 1.0 / 3, 1.0 / 3);
    r.weights.push_back(0.225);
    add_orbit3(r, 0.059715871789770, 0.470142064105115, 0.132394152788506);
    add_orbit3(r, 0.797426985353087, 0.101286507323456, 0.125939180544827);
    r.degree = 5;
  } else {
    r = collapsed_gauss_rule((degree + 3) / 2);
    r.degree = degree;
  }
  return r;
}

cd green(cd kappa, const Vec3& x, const Vec3& y) {
  const double r = (x - y).norm();
  if (!(r > 0.0)) throw QuadratureError("Green's function evaluated at r = 0");
  return std::exp(cd(0.0, -1.0) * kappa * r) * (inv_four_pi / r);
}

cd green_gradient_factor(cd kappa, double r) {
  const cd ikr = cd(0.0, 1.0) * kappa * r;
  return -(1.0 + ikr) * std::exp(-ikr) * (inv_four_pi / (r * r * r));
}

const char* to_string(PairRelation r) {
  switch (r) {
    case PairRelation::Identical: return "identical";
    case PairRelation::Edge: return "edge";
    case PairRelation::Vertex: return "vertex";
    case PairRelation::Near: return "near";
    case PairRelation::Far: return "far";
  }
  return "?";
}

PairClass near_singular_split(const Corners& a, const Corners& b, double h) {
  auto diam = [](const Corners& c) {
    return std::max({(c[0] - c[1]).norm(), (c[1] - c[2]).norm(), (c[2] - c[0]).norm()});
  };
  const double da = diam(a), db = diam(b);
  const double tol = 1e-8 * (da + db);
  std::array<int, 3> match{-1, -1, -1};
  int shared = 0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if ((a[i] - b[j]).norm() <= tol) {
        match[i] = j;
        ++shared;
        break;
      }
    }
  }
  PairClass c;
  if (shared == 0) {
    if (h <= 0.0) h = std::max(da, db);
    const Vec3 ca = (a[0] + a[1] + a[2]) / 3.0;
    const Vec3 cb = (b[0] + b[1] + b[2]) / 3.0;
    c.relation = (ca - cb).norm() < 2.0 * h ? PairRelation::Near : PairRelation::Far;
    return c;
  }
  // Shared vertices are ordered by position, not by index, so that swapping
  // the two triangles yields mirrored point sets.
  auto before = [tol](const Vec3& p, const Vec3& q) {
    for (int m = 0; m < 3; ++m) {
      if (std::abs(p[m] - q[m]) > tol) return p[m] < q[m];
    }
    return false;
  };
  std::array<int, 3> shared_a{};
  int slot = 0;
  for (int i = 0; i < 3; ++i) {
    if (match[i] >= 0) shared_a[slot++] = i;
  }
  std::sort(shared_a.begin(), shared_a.begin() + shared, [&](int i, int j) { return before(a[i], a[j]); });
  std::array<bool, 3> used_a{false, false, false}, used_b{false, false, false};
  for (int s = 0; s < shared; ++s) {
    c.order_a[s] = shared_a[s];
    c.order_b[s] = match[shared_a[s]];
    used_a[shared_a[s]] = true;
    used_b[match[shared_a[s]]] = true;
  }
  for (int i = 0, s = shared; i < 3; ++i) {
    if (!used_a[i]) c.order_a[s++] = i;
  }
  for (int j = 0, s = shared; j < 3; ++j) {
    if (!used_b[j]) c.order_b[s++] = j;
  }
  if (shared == 1) {
    // Only slot 0 is constrained; keep the remaining vertices in cyclic order.
    c.order_a = {c.order_a[0], (c.order_a[0] + 1) % 3, (c.order_a[0] + 2) % 3};
    c.order_b = {c.order_b[0], (c.order_b[0] + 1) % 3, (c.order_b[0] + 2) % 3};
  }
  c.relation = shared == 3 ? PairRelation::Identical
               : shared == 2 ? PairRelation::Edge
                             : PairRelation::Vertex;
  return c;
}

PairQuadrature::PairQuadrature(QuadratureOrders orders)
    : orders_(orders),
      singular_{sauter_schwab_rule(PairRelation::Identical, orders.singular),
                sauter_schwab_rule(PairRelation::Edge, orders.singular),
                sauter_schwab_rule(PairRelation::Vertex, orders.singular)},
      near_(triangle_rule(orders.near)),
      far_(triangle_rule(orders.far)),
      refined_far_(triangle_rule(orders.refined_far)) {}

void tensor_points(const Corners& a, const TriangleRule& ra, const Corners& b, const TriangleRule& rb,
                   PairPoints& out) {
  out.clear();
  const double area_a = 0.5 * (a[1] - a[0]).cross(a[2] - a[0]).norm();
  const double area_b = 0.5 * (b[1] - b[0]).cross(b[2] - b[0]).norm();
  const std::size_t na = ra.weights.size(), nb = rb.weights.size();
  out.x.reserve(na * nb);
  out.y.reserve(na * nb);
  out.w.reserve(na * nb);
  for (std::size_t i = 0; i < na; ++i) {
    const Vec3 x = ra.points[i][0] * a[0] + ra.points[i][1] * a[1] + ra.points[i][2] * a[2];
    for (std::size_t j = 0; j < nb; ++j) {
      out.x.push_back(x);
      out.y.push_back(rb.points[j][0] * b[0] + rb.points[j][1] * b[1] + rb.points[j][2] * b[2]);
      out.w.push_back(area_a * area_b * ra.weights[i] * rb.weights[j]);
    }
  }
}

void PairQuadrature::points(const Corners& a, const Corners& b, const PairClass& cls,
                            PairPoints& out) const {
  if (cls.relation == PairRelation::Near || cls.relation == PairRelation::Far) {
    const TriangleRule& r = cls.relation == PairRelation::Near ? near_ : far_;
    tensor_points(a, r, b, r, out);
    return;
  }
  out.clear();
  const double area_a = 0.5 * (a[1] - a[0]).cross(a[2] - a[0]).norm();
  const double area_b = 0.5 * (b[1] - b[0]).cross(b[2] - b[0]).norm();
  const ReferencePairRule& ref = singular_[static_cast<int>(cls.relation)];
  const Vec3& p0 = a[cls.order_a[0]];
  const Vec3 pu = a[cls.order_a[1]] - p0;
  const Vec3 pv = a[cls.order_a[2]] - a[cls.order_a[1]];
  const Vec3& q0 = b[cls.order_b[0]];
  const Vec3 qu = b[cls.order_b[1]] - q0;
  const Vec3 qv = b[cls.order_b[2]] - b[cls.order_b[1]];
  const double jac = 4.0 * area_a * area_b;
  const std::size_t n = ref.w.size();
  out.x.resize(n);
  out.y.resize(n);
  out.w.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.x[i] = p0 + ref.x[i][0] * pu + ref.x[i][1] * pv;
    out.y[i] = q0 + ref.y[i][0] * qu + ref.y[i][1] * qv;
    out.w[i] = jac * ref.w[i];
  }
}

cd integrate_pair(const std::function<cd(const Vec3&, const Vec3&)>& integrand, const Corners& test,
                  const Corners& trial, const PairQuadrature& quad) {
  const PairClass cls = near_singular_split(test, trial);
  PairPoints pts;
  quad.points(test, trial, cls, pts);
  cd sum = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) sum += pts.w[i] * integrand(pts.x[i], pts.y[i]);
  if (!finite(sum)) throw QuadratureError(describe(test, trial, cls.relation));
  return sum;
}

void integrate_local(const Corners& test, const Corners& trial, const PairClass& cls,
                     std::span<const cd> kappas, const LocalRequest& request,
                     const PairQuadrature& quad, PairPoints& pts,
                     std::vector<LocalInteraction>& out) {
  quad.points(test, trial, cls, pts);
  integrate_local_points(test, trial, cls.relation, pts, kappas, request, out);
}

void integrate_local_points(const Corners& test, const Corners& trial, PairRelation relation,
                            const PairPoints& pts, std::span<const cd> kappas,
                            const LocalRequest& request, std::vector<LocalInteraction>& out) {
  const std::size_t nk = kappas.size();
  out.assign(nk, LocalInteraction{});

  const bool want_k = request.double_layer && relation != PairRelation::Identical;
  const bool want_s = request.single_layer;

  // Moments about the first test vertex; the shape products are recovered
  // from them exactly.
  const Vec3& o = test[0];
  struct Acc {
    cd i0 = 0.0, ixy = 0.0;
    std::array<cd, 3> ix{}, iy{}, jc{}, jd{};
  };
  std::vector<Acc> acc(nk);
  const cd minus_i(0.0, -1.0);

  for (std::size_t p = 0; p < pts.size(); ++p) {
    const Vec3 x = pts.x[p] - o;
    const Vec3 y = pts.y[p] - o;
    const Vec3 d = x - y;
    const double r = d.norm();
    if (!(r > 0.0)) throw QuadratureError(describe(test, trial, relation));
    const double w = pts.w[p];
    const double xy = x.dot(y);
    const Vec3 c = x.cross(y);
    for (std::size_t k = 0; k < nk; ++k) {
      // exp(-i kappa r) split into modulus and phase.
      const double phase = kappas[k].real() * r;
      const double decay = kappas[k].imag() * r;
      const double mod = decay == 0.0 ? 1.0 : std::exp(decay);
      const cd e(mod * std::cos(phase), -mod * std::sin(phase));
      Acc& a = acc[k];
      if (want_s) {
        const cd g = w * inv_four_pi / r * e;
        a.i0 += g;
        a.ixy += g * xy;
        for (int m = 0; m < 3; ++m) {
          a.ix[m] += g * x[m];
          a.iy[m] += g * y[m];
        }
      }
      if (want_k) {
        const cd h = -w * inv_four_pi / (r * r * r) * (1.0 - minus_i * kappas[k] * r) * e;
        for (int m = 0; m < 3; ++m) {
          a.jc[m] += h * c[m];
          a.jd[m] += h * d[m];
        }
      }
    }
  }

  const double area_a = 0.5 * (test[1] - test[0]).cross(test[2] - test[0]).norm();
  const double area_b = 0.5 * (trial[1] - trial[0]).cross(trial[2] - trial[0]).norm();
  const double scale = 1.0 / (4.0 * area_a * area_b);
  std::array<Vec3, 3> v, wv;
  for (int i = 0; i < 3; ++i) {
    v[i] = test[i] - o;
    wv[i] = trial[i] - o;
  }
  auto dot = [](const std::array<cd, 3>& z, const Vec3& u) { return z[0] * u[0] + z[1] * u[1] + z[2] * u[2]; };

  for (std::size_t k = 0; k < nk; ++k) {
    const Acc& a = acc[k];
    LocalInteraction& li = out[k];
    if (want_s) {
      li.D = a.i0 / (area_a * area_b);
      for (int i = 0; i < 3; ++i) {
        const cd vi_iy = dot(a.iy, v[i]);
        for (int j = 0; j < 3; ++j) {
          li.S(i, j) = (a.ixy - vi_iy - dot(a.ix, wv[j]) + v[i].dot(wv[j]) * a.i0) * scale;
        }
      }
    }
    if (want_k) {
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
          li.K(i, j) = (dot(a.jc, wv[j] - v[i]) + dot(a.jd, wv[j].cross(v[i]))) * scale;
        }
      }
    }
    if (!finite(li.D) || !li.S.allFinite() || !li.K.allFinite()) {
      throw QuadratureError(describe(test, trial, relation));
    }
  }
}

}  // namespace mtbem
