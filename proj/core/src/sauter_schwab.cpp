// Regularizing coordinate transforms for coincident, edge-adjacent and
// vertex-adjacent triangle pairs. Each maps [0,1]^4 onto the reference pair
// so that the Jacobian cancels the 1/r singularity.

#include "mtbem/quadrature.hpp"

namespace mtbem {

namespace {

using V2 = Eigen::Vector2d;

template <class Emit>
void for_each_cube_point(int n, Emit emit) {
  const LineRule g = gauss_legendre(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          emit(g.points[a], g.points[b], g.points[c], g.points[d],
               g.weights[a] * g.weights[b] * g.weights[c] * g.weights[d]);
        }
}

void identical(ReferencePairRule& r, int n) {
  for_each_cube_point(n, [&](double xi, double e1, double e2, double e3, double w) {
    const double jac = w * xi * xi * xi * e1 * e1 * e2;
    const V2 p[6][2] = {
        {V2(xi, xi * (1 - e1 + e1 * e2)), V2(xi * (1 - e1 * e2 * e3), xi * (1 - e1))},
        {V2(xi * (1 - e1 * e2 * e3), xi * (1 - e1)), V2(xi, xi * (1 - e1 + e1 * e2))},
        {V2(xi, xi * e1 * (1 - e2 + e2 * e3)), V2(xi * (1 - e1 * e2), xi * e1 * (1 - e2))},
        {V2(xi * (1 - e1 * e2), xi * e1 * (1 - e2)), V2(xi, xi * e1 * (1 - e2 + e2 * e3))},
        {V2(xi * (1 - e1 * e2 * e3), xi * e1 * (1 - e2 * e3)), V2(xi, xi * e1 * (1 - e2))},
        {V2(xi, xi * e1 * (1 - e2)), V2(xi * (1 - e1 * e2 * e3), xi * e1 * (1 - e2 * e3))},
    };
    for (const auto& q : p) {
      r.x.push_back(q[0]);
      r.y.push_back(q[1]);
      r.w.push_back(jac);
    }
  });
}

void edge(ReferencePairRule& r, int n) {
  for_each_cube_point(n, [&](double xi, double e1, double e2, double e3, double w) {
    const double jac = w * xi * xi * xi * e1 * e1;
    auto add = [&](const V2& x, const V2& y, double f) {
      r.x.push_back(xi * x);
      r.y.push_back(xi * y);
      r.w.push_back(jac * f);
    };
    add(V2(1, e1 * e3), V2(1 - e1 * e2, e1 * (1 - e2)), 1.0);
    add(V2(1, e1), V2(1 - e1 * e2 * e3, e1 * e2 * (1 - e3)), e2);
    add(V2(1 - e1 * e2, e1 * (1 - e2)), V2(1, e1 * e2 * e3), e2);
    add(V2(1 - e1 * e2 * e3, e1 * e2 * (1 - e3)), V2(1, e1), e2);
    add(V2(1 - e1 * e2 * e3, e1 * (1 - e2 * e3)), V2(1, e1 * e2), e2);
  });
}

void vertex(ReferencePairRule& r, int n) {
  for_each_cube_point(n, [&](double xi, double e1, double e2, double e3, double w) {
    const double jac = w * xi * xi * xi * e2;
    r.x.push_back(xi * V2(1, e1));
    r.y.push_back(xi * e2 * V2(1, e3));
    r.w.push_back(jac);
    r.x.push_back(xi * e2 * V2(1, e3));
    r.y.push_back(xi * V2(1, e1));
    r.w.push_back(jac);
  });
}

}  // namespace

ReferencePairRule sauter_schwab_rule(PairRelation relation, int n) {
  if (n < 1) throw QuadratureError("singular quadrature order must be positive");
  ReferencePairRule r;
  switch (relation) {
    case PairRelation::Identical: identical(r, n); break;
    case PairRelation::Edge: {
      // Average with the x <-> y mirror so the rule is symmetric in the pair.
      edge(r, n);
      const std::size_t m = r.w.size();
      r.x.reserve(2 * m);
      r.y.reserve(2 * m);
      r.w.reserve(2 * m);
      for (std::size_t i = 0; i < m; ++i) {
        r.w[i] *= 0.5;
        r.x.push_back(r.y[i]);
        r.y.push_back(r.x[i]);
        r.w.push_back(r.w[i]);
      }
      break;
    }
    case PairRelation::Vertex: vertex(r, n); break;
    default: throw QuadratureError("no regularizing transform for a separated pair");
  }
  return r;
}

}  // namespace mtbem
