#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "tbill/deviations.hpp"
#include "tbill/iet.hpp"

namespace tbill {

struct RauzyGraph {
  struct Edge {
    int from = 0;
    int to = 0;
    RauzyType type = RauzyType::Top;
  };
  std::vector<Permutation> nodes;  ///< nodes[0] is the starting permutation
  std::vector<Edge> edges;

  int index_of(const Permutation& p) const;
};

/// Breadth-first closure under both Rauzy moves.
RauzyGraph enumerate_rauzy_class(const Permutation& perm);

/// Closed path in the Rauzy diagram with its cocycle matrix and substitution.
/// sigma is the composition of the step substitutions with the first step
/// outermost, so matrix(sigma) = M.
struct RauzyLoop {
  Permutation base_perm;
  std::vector<RauzyType> steps;
  IntMatrix M;
  Substitution sigma;
};

/// Throws NotALoop if the path does not come back to base_perm (an empty
/// path is rejected too).
RauzyLoop loop_matrix(const Permutation& base_perm, const std::vector<RauzyType>& steps);

/// Matrix product along a path without the loop requirement.
RauzyLoop path_matrix(const Permutation& base_perm, const std::vector<RauzyType>& steps);

/// Smallest k <= (d-1)^2 + 1 with M^k entrywise positive, or 0 if none.
int primitivity_reach(const IntMatrix& M);

/// Loops from base_perm of length <= max_len, ordered by length and then
/// lexicographically with top < bottom. With only_valid, keeps loops whose
/// matrix is primitive and satisfies the spectral hypotheses.
std::vector<RauzyLoop> search_loops(const Permutation& base_perm, int max_len, bool only_valid = true);

struct SelfSimilarSystem {
  RauzyLoop loop;
  double lambda1 = 0.0;
  Eigen::VectorXd V;   ///< Perron vector of M, coordinates summing to 1
  double lambda2 = 0.0;
  double lambda3_modulus = 0.0;
  Eigen::VectorXd W1;  ///< Perron vector of the transpose, summing to 1
  Eigen::VectorXd W2;  ///< lambda2 eigenvector of the transpose, sup norm 1
  Eigen::VectorXd V2;  ///< lambda2 eigenvector of M
  std::vector<std::complex<double>> spectrum;  ///< by decreasing modulus
  int K = 0;           ///< longest image of a letter
  int reach = 0;       ///< primitivity reach of M
  double A_const = 0.0;
  double B_const = 0.0;
  double C_const = 0.0;
  double kappa = 0.0;
  double rho = 0.0;    ///< log|lambda2| / log lambda1
  Iet iet;             ///< reversal-type map with lengths V
  double selfsim_residual = 0.0;
  int growth_range = 30;  ///< n range over which A and B were measured
};

/// Throws NotPrimitive or SpectralHypothesisFailed.
SelfSimilarSystem build_selfsim(const RauzyLoop& loop);

/// |sigma^n(a)| / lambda1^n for n = 0..n_max, one row per n.
Eigen::MatrixXd growth_ratios(const SelfSimilarSystem& sys, int n_max);

/// Prefix s_0 sigma(s_1) ... sigma^{l-1}(s_{l-1}) sigma^l(m) sigma^{l-1}(p_{l-1}) ... p_0
/// of the coding of x. p_words[i] holds p_i.
struct PrefixDecomposition {
  int l = 0;
  std::vector<Word> s_words;
  Word m_word;
  std::vector<Word> p_words;

  Word reassemble(const Substitution& sigma) const;
};

PrefixDecomposition prefix_decompose(const SelfSimilarSystem& sys, double x, std::int64_t n);

/// Tower data of order l for the orbit of x: the s_i and the start of the
/// infinite word w with coding(x) = s_0 sigma(s_1) ... sigma^{l-1}(s_{l-1}) sigma^l(w).
struct TowerEntry {
  std::vector<Word> s_words;
  Word w_prefix;
  std::int64_t entry_time = 0;  ///< |s_0 sigma(s_1) ... sigma^{l-1}(s_{l-1})|
};

TowerEntry tower_entry(const SelfSimilarSystem& sys, double x, int l, int w_letters);

struct SandwichReport {
  double aN = 0.0;
  double tau = 0.0;
  double x0 = 0.0;
  std::int64_t n_max = 0;
  double m_abs = 0.0;
  std::vector<double> H;
  double alpha = 0.0;
  Eigen::VectorXd U;
  double D = 0.0;        ///< |alpha| |l2|/(|l2|-1) 2(K-1) |W2|_inf + 1
  double D_prime = 0.0;  ///< D * A^{-rho}
  double margin = 1.0;   ///< max(1, (D - 1 + 2(K-1) sum_k |M^T^k U|_inf) / D)
  double C1 = 0.0;
  double C2 = 0.0;       ///< (|alpha|/4) exp(-C / log lambda1)
  double C2_half = 0.0;  ///< (|alpha|/2) exp(-C / log lambda1)
  int l0 = 0;
  double upper_worst_ratio = 0.0;  ///< max over n of |S_n h| / (C1 n^rho)
  bool upper_ok = false;
  std::vector<int> levels;
  std::vector<std::int64_t> n_l;
  std::vector<double> S_at_n_l;
  double lower_worst_ratio = 0.0;  ///< min over l >= l0 of |S_{n_l} h| / n_l^rho
  bool lower_ok = false;       ///< with C2
  bool lower_ok_half = false;  ///< with C2_half
  DeviationReport series;
  double slope_error = 0.0;  ///< |fitted exponent - rho|
};

/// Throws HInE3, MeanDegenerate, or argument errors.
SandwichReport verify_sandwich(const SelfSimilarSystem& sys, double aN, double tau, double x0, std::int64_t n_max);

}  // namespace tbill
