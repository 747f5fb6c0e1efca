#include "tbill/errors.hpp"

#include <cmath>

#include "tbill/rng.hpp"

namespace tbill {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NonPositiveArc: return "NonPositiveArc";
    case ErrorKind::NonMaximalLastArc: return "NonMaximalLastArc";
    case ErrorKind::TauOutOfRange: return "TauOutOfRange";
    case ErrorKind::CornerHit: return "CornerHit";
    case ErrorKind::HitDiscontinuity: return "HitDiscontinuity";
    case ErrorKind::ConditionC1Violated: return "ConditionC1Violated";
    case ErrorKind::DegenerateStep: return "DegenerateStep";
    case ErrorKind::MeanDegenerate: return "MeanDegenerate";
    case ErrorKind::ReduciblePermutation: return "ReduciblePermutation";
    case ErrorKind::NotALoop: return "NotALoop";
    case ErrorKind::NotPrimitive: return "NotPrimitive";
    case ErrorKind::SpectralHypothesisFailed: return "SpectralHypothesisFailed";
    case ErrorKind::HInE3: return "HInE3";
  }
  return "Unknown";
}

std::vector<double> SplitMix64::simplex(int d) {
  std::vector<double> x(static_cast<std::size_t>(d));
  double sum = 0.0;
  for (auto& v : x) {
    v = -std::log(uniform(0.0, 1.0));
    sum += v;
  }
  for (auto& v : x) v /= sum;
  return x;
}

}  // namespace tbill
