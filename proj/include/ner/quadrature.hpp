#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <queue>
#include <sstream>
#include <vector>

#include "ner/types.hpp"

namespace ner {

namespace detail {

// Gauss 7 / Kronrod 15 node set on [-1, 1]: {node, gauss weight, kronrod weight}.
// Nodes with zero gauss weight are Kronrod-only; nonzero nodes enter as +-x.
inline constexpr std::array<std::array<double, 3>, 8> kG7K15 = {{
    {0.000000000000000, 0.417959183673469, 0.209482141084728},
    {0.405845151377397, 0.381830050505119, 0.190350578064785},
    {0.741531185599394, 0.279705391489277, 0.140653259715525},
    {0.949107912342759, 0.129484966168870, 0.063092092629979},
    {0.207784955007898, 0.0, 0.204432940075298},
    {0.586087235467691, 0.0, 0.169004726639267},
    {0.864864423359769, 0.0, 0.104790010322250},
    {0.991455371120813, 0.0, 0.022935322010529},
}};

struct PanelResult {
  double integral = 0.0;
  double error = 0.0;
};

template <class Func>
PanelResult g7k15_panel(const Func& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double f0 = f(c);
  double g7 = kG7K15[0][1] * f0;
  double k15 = kG7K15[0][2] * f0;
  for (int i = 1; i < 8; ++i) {
    const double dx = h * kG7K15[i][0];
    const double fi = f(c + dx) + f(c - dx);
    g7 += kG7K15[i][1] * fi;
    k15 += kG7K15[i][2] * fi;
  }
  g7 *= h;
  k15 *= h;
  PanelResult r;
  r.integral = k15;
  // QUADPACK-style sharpened estimate of |K15 - true|.
  const double diff = std::fabs(g7 - k15);
  r.error = std::min(diff, 200.0 * diff * std::sqrt(diff));
  return r;
}

}  // namespace detail

/// Adaptive Gauss-Kronrod integration of f on [a, b] to relative tolerance
/// rel_tol. Bisects the worst panel until the summed error estimate is below
/// tolerance; throws numerical_error (with the achieved estimate) if the
/// panel budget runs out first.
template <class Func>
double integrate_adaptive(const Func& f, double a, double b, double rel_tol = 1e-10,
                          int max_panels = 4000) {
  struct Panel {
    double a, b, integral, error;
    bool operator<(const Panel& o) const { return error < o.error; }
  };
  std::priority_queue<Panel> panels;
  // Seed with a few panels; radial integrands are peaked near the origin of
  // an exponentially decaying range, so a graded start avoids early stalls.
  const int seed = 8;
  double total = 0.0, total_err = 0.0, total_l1 = 0.0;
  for (int i = 0; i < seed; ++i) {
    const double pa = a + (b - a) * i / seed;
    const double pb = a + (b - a) * (i + 1) / seed;
    const auto r = detail::g7k15_panel(f, pa, pb);
    panels.push({pa, pb, r.integral, r.error});
    total += r.integral;
    total_err += r.error;
    total_l1 += std::fabs(r.integral);
  }
  int used = seed;
  // The L1 mass sets the resolvable absolute scale when the integral itself
  // cancels to (near) zero.
  auto threshold = [&] { return std::max(rel_tol * std::max(std::fabs(total), total_l1), 1e-300); };
  while (total_err > threshold() && used < max_panels) {
    const Panel worst = panels.top();
    panels.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    const auto left = detail::g7k15_panel(f, worst.a, mid);
    const auto right = detail::g7k15_panel(f, mid, worst.b);
    total += left.integral + right.integral - worst.integral;
    total_err += left.error + right.error - worst.error;
    total_l1 += std::fabs(left.integral) + std::fabs(right.integral) - std::fabs(worst.integral);
    panels.push({worst.a, mid, left.integral, left.error});
    panels.push({mid, worst.b, right.integral, right.error});
    used += 2;
  }
  if (total_err > threshold()) {
    std::ostringstream msg;
    msg << "integrate_adaptive: failed to converge; achieved error estimate "
        << total_err << " on integral " << total << " (requested rel tol " << rel_tol << ")";
    throw numerical_error(msg.str());
  }
  return total;
}

/// Nodes and weights of n-point Gauss-Legendre quadrature on [-1, 1],
/// exact for polynomials of degree <= 2n-1.
inline void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Newton iteration from the Chebyshev-based initial guess.
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / pp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
    weights[n - 1 - i] = weights[i];
  }
}

}  // namespace ner
