#include "videograph/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "videograph/errors.hpp"

namespace videograph {

GradCheckResult grad_check(const ScalarFunction& f, std::vector<Tensor> points, double h) {
  return grad_check(f, std::move(points), GradCheckOptions{h, 0, 0});
}

GradCheckResult grad_check(const ScalarFunction& f, std::vector<Tensor> points, const GradCheckOptions& options) {
  const double h = options.h;
  std::mt19937_64 rng(options.sample_seed);
  for (Tensor& p : points) {
    p.set_requires_grad(true);
    p.zero_grad();
  }
  Tensor y = f(points);
  if (y.numel() != 1) throw ShapeError("grad_check needs a scalar function, got " + shape_to_string(y.shape()));
  if (!std::isfinite(y.item())) throw NumericError("grad_check: non-finite function value");
  y.backward();

  std::vector<std::vector<double>> analytic;
  for (const Tensor& p : points) {
    if (p.has_grad()) {
      analytic.emplace_back(p.grad().begin(), p.grad().end());
    } else {
      analytic.emplace_back(p.numel(), 0.0);
    }
  }

  GradCheckResult result;
  bool first = true;
  NoGradGuard no_grad;
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto values = points[i].mutable_data();
    std::vector<std::size_t> components(values.size());
    std::iota(components.begin(), components.end(), 0);
    if (options.max_components > 0 && components.size() > options.max_components) {
      std::shuffle(components.begin(), components.end(), rng);
      components.resize(options.max_components);
      std::sort(components.begin(), components.end());
    }
    for (std::size_t k : components) {
      const double saved = values[k];
      values[k] = saved + h;
      const double plus = f(points).item();
      values[k] = saved - h;
      const double minus = f(points).item();
      values[k] = saved;
      if (!std::isfinite(plus) || !std::isfinite(minus)) {
        throw NumericError("grad_check: non-finite value while perturbing input " + std::to_string(i));
      }
      const double numeric = (plus - minus) / (2.0 * h);
      const double a = analytic[i][k];
      const double err = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
      if (err > result.max_relative_error || first) {
        result = {err, i, k, a, numeric};
        first = false;
      }
    }
  }
  return result;
}

}  // namespace videograph
