#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

#include "tbill/geometry.hpp"
#include "tbill/iet.hpp"

namespace tbill {

using Complex = std::complex<double>;

/// Threshold below which the mean displacement counts as zero.
inline constexpr double kMeanEps = 1e-10;

/// Translations picked up by a pair of crossings (side k, then side N),
/// in the frame where tile 0 has rotation exp(-i x0 / r).
struct DisplacementData {
  std::vector<Complex> f;  ///< f_1..f_{N-1}
  std::vector<Complex> X;  ///< X_0..X_{N-1}, X_k = -(i/r)(x0 + c_k)
  Complex m;               ///< sum a_k f_k
  std::vector<double> arcs;  ///< a_1..a_{N-1}
  double x0 = 0.0;
  double s = 0.0;  ///< 1 / r
};

DisplacementData displacement_vectors(const CyclicPolygon& polygon, double x0);

/// The mean written out as a single sum of exponentials, for cross-checking.
Complex mean_expanded(const CyclicPolygon& polygon, double x0);

struct MeanCheck {
  bool nonzero = false;
  double modulus = 0.0;
};

MeanCheck mean_is_nonzero(const CyclicPolygon& polygon, double x0);

/// G = f / m - 1 and its imaginary part H. h is the step function equal to
/// H_k on the k-th arc.
struct DeviationVector {
  std::vector<Complex> G;
  std::vector<double> H;
  std::vector<double> breakpoints;  ///< c_0..c_{N-1}

  double h(double x) const;
};

/// Throws MeanDegenerate when |m| <= kMeanEps.
DeviationVector deviation_vector(const DisplacementData& data);

/// Arc sum a_first + ... + a_{first+count-1}, with 1-based `first`.
struct ArcSum {
  int first = 1;
  int count = 1;
};

/// Integer combination of a_1..a_{N-1}.
using LinearForm = std::vector<int>;

double evaluate(const LinearForm& form, const std::vector<double>& arcs);

/// |m|^2 H = r^2 Q Theta(s) with Theta_i = sin(theta_i s). Rows of Q are
/// indexed by k = 1..N-1, columns by the arc-sum basis ordered by number of
/// terms and then by first index.
struct QDecomposition {
  int n_sides = 0;
  std::vector<double> arcs;  ///< a_1..a_{N-1}
  std::vector<ArcSum> basis;
  std::vector<std::vector<LinearForm>> symbolic;  ///< symbolic[k][i]
  Eigen::MatrixXd Q;

  Eigen::MatrixXd transposed() const { return Q.transpose(); }
  Eigen::VectorXd theta(double s) const;
  double theta_value(std::size_t i) const;
};

QDecomposition build_q(const CyclicPolygon& polygon);
QDecomposition build_q(const std::vector<double>& arcs);

/// Numerical rank with singular values above 1e-9 * sigma_max.
int rank_q(const QDecomposition& q);

/// Determinant of the minor of the transpose with the given 1-based rows and
/// columns.
double transposed_minor(const QDecomposition& q, const std::vector<int>& rows, const std::vector<int>& cols);

/// Minor of the transpose on rows 2..N-1 and columns 1..N-2.
double odd_minor_determinant(const QDecomposition& q);

/// a_{N-1} * prod_{k=2}^{N-2} (a_k + a_{k+1}).
double odd_minor_identity(const std::vector<double>& arcs);

/// max_k | |m|^2 H_k - r^2 (Q Theta)_k |.
double reconstruction_error(const QDecomposition& q, const CyclicPolygon& polygon, double x0);

struct EnvelopeFit {
  double exponent = 0.0;
  double halfwidth = 0.0;
  int points = 0;
};

/// Least-squares slope of log(envelope) against log(n) over the checkpoints
/// with log n >= log(n_max) / 2. NaN exponent when the envelope vanishes.
EnvelopeFit fit_envelope_exponent(const std::vector<std::int64_t>& n, const std::vector<double>& envelope);

/// round(2^{j/2}) for j = 0, 1, ..., deduplicated and capped at n_max.
std::vector<std::int64_t> default_checkpoints(std::int64_t n_max);

struct DeviationReport {
  std::vector<std::int64_t> n_checkpoints;
  std::vector<double> dev_abs;      ///< absolute deviation of the Birkhoff sum
  std::vector<double> running_max;  ///< max over all m <= n
  double fitted_exponent = 0.0;
  double ci_halfwidth = 0.0;
  Complex m;
  double x0 = 0.0;         ///< start actually used
  bool perturbed = false;  ///< x0 was nudged off a breakpoint orbit
};

/// Deviation series of the Birkhoff sums of an arbitrary step function.
DeviationReport deviation_series(const Iet& T, const std::vector<double>& weights, double x0, std::int64_t n_max,
                                 std::vector<std::int64_t> checkpoints = {});
DeviationReport deviation_series(const Iet& T, const std::vector<Complex>& weights, double x0, std::int64_t n_max,
                                 std::vector<std::int64_t> checkpoints = {});

/// What the billiard series measures. Displacement is |S_n f - n m|, the
/// distance of the trajectory from its asymptotic line after n pairs of
/// crossings (up to a bounded error). Transverse is |S_n h|, its component
/// across the mean direction in units of |m|.
enum class DeviationMeasure { Displacement, Transverse };

const char* to_string(DeviationMeasure m);

/// Deviation series for the billiard. x0 in [1, 1 + a_N) is first moved into
/// [0, 1) by one application of the billiard map.
DeviationReport deviation_series(const CyclicPolygon& polygon, double x0, double tau, std::int64_t n_max,
                                 std::vector<std::int64_t> checkpoints = {},
                                 DeviationMeasure measure = DeviationMeasure::Displacement);

struct EstimatedSpectrum {
  std::vector<double> theta_hat;
  std::vector<double> halfwidth;
  double ratio2 = 0.0;  ///< theta_2 / theta_1
  double ratio3 = 0.0;  ///< theta_3 / theta_1
  double ratio2_halfwidth = 0.0;
  double ratio3_halfwidth = 0.0;
  std::int64_t n_matrices = 0;
  int resamples = 0;  ///< degenerate steps that forced fresh lengths
};

/// Top Lyapunov exponents (per Zorich block) of the accelerated cocycle for the
/// d-letter reversal, from renormalized induction started at random lengths.
/// Half-widths are 95% bootstrap intervals over 20 batches.
EstimatedSpectrum estimate_lyapunov_ratios(int d, std::int64_t n_matrices, std::uint64_t seed, int qr_interval = 1,
                                           int n_exponents = 3);

}  // namespace tbill
