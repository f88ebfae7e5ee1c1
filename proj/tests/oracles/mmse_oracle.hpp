#pragma once

namespace easlab::oracle {

// Spectral amplitude gain computed straight from its definition as a
// conditional mean: unit noise variance, speech variance xi, observed
// magnitude sqrt(gamma), integrated numerically over amplitude and phase.
double quadrature_mmse_gain(double xi, double gamma);

}  // namespace easlab::oracle
