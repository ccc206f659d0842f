#pragma once

// Independent oracles for tests: scalar reference implementations and
// finite-difference helpers. Nothing here calls the code path it checks.

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "nbtc/mlp.h"

namespace oracle {

/// Naive per-neuron MLP evaluation with std::vector temporaries.
std::vector<double> mlp_forward_scalar(const nbtc::MlpDecoder& m, const std::vector<double>& x);

/// Textbook Adam for one scalar parameter over a gradient sequence.
double adam_scalar(double p, const std::vector<double>& grads, double lr, double b1 = 0.9, double b2 = 0.999,
                   double eps = 1e-8);

/// Central differences of f w.r.t. every entry of `params`.
std::vector<double> central_differences(std::span<double> params, const std::function<double()>& f,
                                        double h = 1e-6);

/// ||a - b|| / max(||a||, ||b||, 1e-12).
double relative_error(std::span<const double> a, std::span<const double> b);

/// Plain bilinear read of an RGB grid at continuous texel coordinates
/// (x, y), texel centers at integers, clamp to edge.
std::array<double, 3> bilinear_at(const std::vector<double>& rgb, int w, int h, double x, double y);

/// Trapezoid-rule integral of f over [a, b].
double integrate(const std::function<double(double)>& f, double a, double b, int n = 200000);

}  // namespace oracle
