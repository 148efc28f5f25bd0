#pragma once

#include "ebshrink/rng.hpp"

namespace ebshrink::intervals {

// Exact draw from the Polya-Gamma PG(1, z) law by the alternating-series
// rejection scheme (inverse-Gaussian body, exponential tail, truncation at
// 0.64). E[PG(1,z)] = tanh(z/2) / (2z).
double polya_gamma1(double z, RngStream& rng);

}  // namespace ebshrink::intervals
