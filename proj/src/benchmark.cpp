#include "pmpo/benchmark.hpp"

#include "pmpo/errors.hpp"

#include <cmath>

namespace pmpo {

BenchmarkKind parse_benchmark_kind(std::string_view name) {
  if (name == "sphere") return BenchmarkKind::Sphere;
  if (name == "rosenbrock") return BenchmarkKind::Rosenbrock;
  if (name == "schwefel") return BenchmarkKind::Schwefel;
  throw InputError("unknown benchmark function \"" + std::string(name) + "\"");
}

std::string_view to_string(BenchmarkKind kind) {
  switch (kind) {
    case BenchmarkKind::Sphere: return "sphere";
    case BenchmarkKind::Rosenbrock: return "rosenbrock";
    case BenchmarkKind::Schwefel: return "schwefel";
  }
  return "unknown";
}

double BenchmarkFunction::value(std::span<const double> x) const {
  if (x.size() != dimension)
    throw InputError("benchmark: expected dimension " + std::to_string(dimension) + ", got " +
                     std::to_string(x.size()));
  double acc = 0.0;
  switch (kind) {
    case BenchmarkKind::Sphere:
      for (double v : x) acc += v * v;
      break;
    case BenchmarkKind::Rosenbrock:
      for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        const double a = x[i + 1] - x[i] * x[i];
        const double b = 1.0 - x[i];
        acc += 100.0 * a * a + b * b;
      }
      break;
    case BenchmarkKind::Schwefel:
      acc = 418.9829 * static_cast<double>(dimension);
      for (double v : x) acc -= v * std::sin(std::sqrt(std::abs(v)));
      break;
  }
  return acc;
}

Domain BenchmarkFunction::domain() const {
  switch (kind) {
    case BenchmarkKind::Sphere: return {-5.12, 5.12};
    case BenchmarkKind::Rosenbrock: return {-2.048, 2.048};
    case BenchmarkKind::Schwefel: return {-500.0, 500.0};
  }
  return {-1.0, 1.0};
}

}  // namespace pmpo
