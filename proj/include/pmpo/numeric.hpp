#pragma once

#include <span>
#include <string>
#include <vector>

namespace pmpo {

// Max-subtracted log(sum(exp(v))). Returns -inf for an empty span.
double logsumexp(std::span<const double> values);

// log(sum(w_i * exp(v_i))) with nonnegative weights; entries with w_i == 0 are skipped.
double weighted_logsumexp(std::span<const double> weights, std::span<const double> values);

std::vector<double> softmax(std::span<const double> values);
std::vector<double> log_softmax(std::span<const double> values);

// Stable log(1 + exp(x)).
double softplus(double x);
// Logistic function.
double sigmoid(double x);

// Shortest decimal that round-trips (used for CSV/JSON numeric fields).
std::string format_double(double value);
// Exactly 17 significant digits; round-trips every finite double.
std::string format_double17(double value);

}  // namespace pmpo
