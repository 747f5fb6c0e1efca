#pragma once

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>
#include <complex>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tbill/geometry.hpp"

namespace tbill {

using Label = int;
using Word = std::vector<Label>;
using IntMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;
using BigInt = boost::multiprecision::cpp_int;

/// Two-row combinatorial datum: top and bottom orders of labels 0..d-1.
struct Permutation {
  std::vector<Label> top;
  std::vector<Label> bottom;

  int size() const { return static_cast<int>(top.size()); }
  bool operator==(const Permutation&) const = default;
  auto operator<=>(const Permutation&) const = default;
};

/// Top 0..d-1, bottom d-1..0.
Permutation reversal(int d);

/// Top in natural order, bottom as given.
Permutation from_bottom_order(std::vector<Label> bottom);

/// False when some proper prefix of the top row is also a prefix (as a set)
/// of the bottom row.
bool is_irreducible(const Permutation& p);

enum class RauzyType { Top, Bottom };

const char* to_string(RauzyType t);

/// Rauzy move on the combinatorics alone. Top type: the last bottom letter
/// moves to just after the last top letter in the bottom row. Bottom type is
/// the mirror image.
Permutation rauzy_move(const Permutation& p, RauzyType t);

/// Substitution on labels 0..d-1. images[a] is the word a maps to.
struct Substitution {
  std::vector<Word> images;

  static Substitution identity(int d);

  int size() const { return static_cast<int>(images.size()); }
  Word apply(const Word& w) const;
  /// (*this o inner)(a) = this(inner(a)).
  Substitution compose(const Substitution& inner) const;
  /// Entry (i, j) counts occurrences of i in images[j].
  IntMatrix matrix() const;
  std::size_t max_image_length() const;
  bool operator==(const Substitution&) const = default;
};

/// Product of transvections, kept in 64-bit integers until a product would
/// overflow and in arbitrary precision afterwards.
class Cocycle {
 public:
  explicit Cocycle(int d);

  void right_multiply(const IntMatrix& m);
  int size() const { return d_; }
  bool is_big() const { return !big_.empty(); }
  BigInt at(int i, int j) const;
  BigInt column_sum(int j) const;
  /// Throws if the entries no longer fit in 64 bits.
  IntMatrix small() const;

 private:
  int d_;
  IntMatrix small_;
  std::vector<BigInt> big_;
};

/// Entrywise product with overflow detection; returns false on overflow.
bool checked_multiply(const IntMatrix& a, const IntMatrix& b, IntMatrix& out);

/// Interval exchange without flips on [0, total). Intervals are half-open;
/// orbit points within kBoundaryEps * total of an interior breakpoint raise
/// HitDiscontinuity.
class Iet {
 public:
  Iet() = default;
  Iet(std::vector<double> lengths, Permutation perm);

  /// Reversal permutation with the given lengths.
  static Iet reversal(std::vector<double> lengths);

  int size() const { return static_cast<int>(lengths_.size()); }
  double total() const { return total_; }
  const std::vector<double>& lengths() const { return lengths_; }
  const Permutation& permutation() const { return perm_; }

  Label interval_of(double x, std::int64_t step = 0) const;
  double eval(double x, std::int64_t step = 0) const;
  /// Image of x together with the label of the interval holding x.
  double eval(double x, Label& label, std::int64_t step) const;
  /// Returns n + 1 points x, T x, ..., T^n x.
  std::vector<double> orbit(double x, std::int64_t n) const;
  /// Left end of the top interval carrying label a.
  double top_start(Label a) const { return top_start_[static_cast<std::size_t>(a)]; }
  double bottom_start(Label a) const { return bottom_start_[static_cast<std::size_t>(a)]; }

 private:
  std::vector<double> lengths_;
  Permutation perm_;
  double total_ = 0.0;
  std::vector<double> top_start_;
  std::vector<double> bottom_start_;
  std::vector<double> breaks_;  // right ends of top intervals, in top order
};

/// Interval exchange with flips. A flipped interval is reversed by the map.
class FlippedIet {
 public:
  FlippedIet() = default;
  FlippedIet(std::vector<double> lengths, Permutation perm, std::vector<bool> flips);

  int size() const { return static_cast<int>(lengths_.size()); }
  double total() const { return total_; }
  const std::vector<double>& lengths() const { return lengths_; }
  const Permutation& permutation() const { return perm_; }
  const std::vector<bool>& flips() const { return flips_; }

  Label interval_of(double x, std::int64_t step = 0) const;
  double eval(double x, std::int64_t step = 0) const;
  std::vector<double> orbit(double x, std::int64_t n) const;

 private:
  std::vector<double> lengths_;
  Permutation perm_;
  std::vector<bool> flips_;
  double total_ = 0.0;
  std::vector<double> top_start_;
  std::vector<double> bottom_start_;
  std::vector<double> breaks_;
};

/// The billiard map on [0, 1 + a_N). Labels 0..N-2 are the arcs a_1..a_{N-1},
/// label N-1 is [1, 1 + tau) and label N is [1 + tau, 1 + a_N). All intervals
/// are flipped; the bottom order is (N-1, 0, 1, ..., N-2, N).
/// Requires 1 < tau < a_N.
FlippedIet make_phi(const CyclicPolygon& polygon, double tau);

/// Closed form of the same map: on the interval of side k,
/// x -> tau + c_{k-1} + c_k - x (mod 1 + a_N).
double phi_closed_form(const CyclicPolygon& polygon, double tau, double x);

/// Phi squared restricted to [0, 1): the reversal on the first N-1 arcs.
/// Checks the identity pointwise and throws ConditionC1Violated otherwise.
Iet square_restrict(const FlippedIet& phi);

enum class InductionKind { RauzyTop, RauzyBottom, ZorichBlock };

const char* to_string(InductionKind k);

struct InductionRecord {
  InductionKind kind = InductionKind::RauzyTop;
  RauzyType type = RauzyType::Top;  ///< type of every step in the record
  int count = 1;
  IntMatrix matrix;
  Substitution substitution;
  Permutation resulting_perm;
};

/// One step of Rauzy-Veech induction from the right. The induced map lives on
/// [0, total - min(last top, last bottom)); with renormalize the lengths are
/// rescaled to sum to 1. Throws DegenerateStep on a tie.
std::pair<Iet, InductionRecord> rauzy_step(const Iet& iet, bool renormalize = false);

/// Maximal run of same-type Rauzy steps.
std::pair<Iet, InductionRecord> zorich_step(const Iet& iet, bool renormalize = false);

struct RokhlinTowers {
  int order = 0;
  Iet base;  ///< induced map after `order` steps, on [0, base.total())
  Cocycle visit_counts{1};
  Substitution substitution;  ///< tower words: substitution.images[j] is tower j read upward

  BigInt height(int j) const { return visit_counts.column_sum(j); }
};

RokhlinTowers rokhlin_towers(const Iet& iet, int l);

/// Letter j of the result is the label of the interval holding T^j(x).
Word symbolic_coding(const Iet& iet, double x, std::int64_t n);

/// Sum of weights[interval of T^k x] for k < n.
double birkhoff_sum(const Iet& iet, const std::vector<double>& weights, double x, std::int64_t n);
std::complex<double> birkhoff_sum(const Iet& iet, const std::vector<std::complex<double>>& weights, double x,
                                  std::int64_t n);

}  // namespace tbill
