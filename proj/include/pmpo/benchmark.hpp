#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

namespace pmpo {

enum class BenchmarkKind { Sphere, Rosenbrock, Schwefel };

BenchmarkKind parse_benchmark_kind(std::string_view name);
std::string_view to_string(BenchmarkKind kind);

// Box the policy is initialized over: mean at the centre, std = half-width.
struct Domain {
  double lower;
  double upper;
  double center() const { return 0.5 * (lower + upper); }
  double half_width() const { return 0.5 * (upper - lower); }
};

// Minimization benchmarks with optimum value ~0:
//   Sphere      sum x_i^2                                   on [-5.12, 5.12]^d
//   Rosenbrock  sum_{i<d-1} 100 (x_{i+1} - x_i^2)^2 + (1 - x_i)^2  on [-2.048, 2.048]^d
//   Schwefel    418.9829 d - sum x_i sin(sqrt|x_i|)          on [-500, 500]^d
struct BenchmarkFunction {
  BenchmarkKind kind = BenchmarkKind::Sphere;
  std::size_t dimension = 2;

  // Raw function value (lower is better). Throws InputError on a dimension mismatch.
  double value(std::span<const double> x) const;
  // Evaluation score for maximization: -value(x).
  double evaluate(std::span<const double> x) const { return -value(x); }
  Domain domain() const;
};

}  // namespace pmpo
