#include "tbill/iet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tbill/errors.hpp"

namespace tbill {

namespace {

void check_permutation(const Permutation& p, int d) {
  if (p.size() != d || static_cast<int>(p.bottom.size()) != d)
    throw Error(ErrorKind::InvalidArgument, "permutation rows must have one entry per interval");
  std::vector<int> seen_top(static_cast<std::size_t>(d), 0), seen_bottom(static_cast<std::size_t>(d), 0);
  for (int i = 0; i < d; ++i) {
    Label t = p.top[static_cast<std::size_t>(i)], b = p.bottom[static_cast<std::size_t>(i)];
    if (t < 0 || t >= d || b < 0 || b >= d) throw Error(ErrorKind::InvalidArgument, "label out of range");
    if (seen_top[static_cast<std::size_t>(t)]++ || seen_bottom[static_cast<std::size_t>(b)]++)
      throw Error(ErrorKind::InvalidArgument, "permutation rows must be bijections");
  }
}

void check_lengths(const std::vector<double>& lengths) {
  if (lengths.empty()) throw Error(ErrorKind::InvalidArgument, "need at least one interval");
  for (double l : lengths)
    if (!(l > 0.0) || !std::isfinite(l)) throw Error(ErrorKind::InvalidArgument, "interval lengths must be positive");
}

// Fills start offsets for the two rows and the interior breakpoints.
void layout(const std::vector<double>& lengths, const Permutation& p, std::vector<double>& top_start,
            std::vector<double>& bottom_start, std::vector<double>& breaks, double& total) {
  const std::size_t d = lengths.size();
  top_start.assign(d, 0.0);
  bottom_start.assign(d, 0.0);
  breaks.clear();
  double acc = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    top_start[static_cast<std::size_t>(p.top[i])] = acc;
    acc += lengths[static_cast<std::size_t>(p.top[i])];
    breaks.push_back(acc);
  }
  total = acc;
  breaks.back() = total;
  acc = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    bottom_start[static_cast<std::size_t>(p.bottom[i])] = acc;
    acc += lengths[static_cast<std::size_t>(p.bottom[i])];
  }
}

// Shared lookup: position in the top row of the interval holding x.
std::size_t locate(const std::vector<double>& breaks, double total, double x, std::int64_t step) {
  const double eps = kBoundaryEps * total;
  if (!(x > -eps && x < total + eps)) throw Error(ErrorKind::InvalidArgument, "point outside the domain", step);
  const std::size_t d = breaks.size();
  for (std::size_t i = 0; i + 1 < d; ++i) {
    if (std::abs(x - breaks[i]) < eps) throw Error(ErrorKind::HitDiscontinuity, "orbit point on a breakpoint", step);
    if (x < breaks[i]) return i;
  }
  return d - 1;
}

}  // namespace

Permutation reversal(int d) {
  Permutation p;
  for (int i = 0; i < d; ++i) {
    p.top.push_back(i);
    p.bottom.push_back(d - 1 - i);
  }
  return p;
}

Permutation from_bottom_order(std::vector<Label> bottom) {
  Permutation p;
  p.top.resize(bottom.size());
  std::iota(p.top.begin(), p.top.end(), 0);
  p.bottom = std::move(bottom);
  return p;
}

bool is_irreducible(const Permutation& p) {
  const int d = p.size();
  std::vector<int> mark(static_cast<std::size_t>(d), 0);
  int balance = 0;
  for (int k = 0; k + 1 < d; ++k) {
    if (++mark[static_cast<std::size_t>(p.top[static_cast<std::size_t>(k)])] == 2) --balance;
    else ++balance;
    if (++mark[static_cast<std::size_t>(p.bottom[static_cast<std::size_t>(k)])] == 2) --balance;
    else ++balance;
    if (balance == 0) return false;
  }
  return true;
}

const char* to_string(RauzyType t) { return t == RauzyType::Top ? "top" : "bottom"; }

const char* to_string(InductionKind k) {
  switch (k) {
    case InductionKind::RauzyTop: return "rauzy_top";
    case InductionKind::RauzyBottom: return "rauzy_bottom";
    case InductionKind::ZorichBlock: return "zorich_block";
  }
  return "unknown";
}

Permutation rauzy_move(const Permutation& p, RauzyType t) {
  Permutation q = p;
  Label alpha = p.top.back();
  Label beta = p.bottom.back();
  if (t == RauzyType::Top) {
    q.bottom.pop_back();
    auto it = std::find(q.bottom.begin(), q.bottom.end(), alpha);
    q.bottom.insert(it + 1, beta);
  } else {
    q.top.pop_back();
    auto it = std::find(q.top.begin(), q.top.end(), beta);
    q.top.insert(it + 1, alpha);
  }
  return q;
}

Substitution Substitution::identity(int d) {
  Substitution s;
  for (int a = 0; a < d; ++a) s.images.push_back({a});
  return s;
}

Word Substitution::apply(const Word& w) const {
  Word out;
  for (Label a : w) {
    const Word& img = images[static_cast<std::size_t>(a)];
    out.insert(out.end(), img.begin(), img.end());
  }
  return out;
}

Substitution Substitution::compose(const Substitution& inner) const {
  Substitution s;
  for (const Word& w : inner.images) s.images.push_back(apply(w));
  return s;
}

IntMatrix Substitution::matrix() const {
  const int d = size();
  IntMatrix m = IntMatrix::Zero(d, d);
  for (int j = 0; j < d; ++j)
    for (Label i : images[static_cast<std::size_t>(j)]) ++m(i, j);
  return m;
}

std::size_t Substitution::max_image_length() const {
  std::size_t k = 0;
  for (const Word& w : images) k = std::max(k, w.size());
  return k;
}

bool checked_multiply(const IntMatrix& a, const IntMatrix& b, IntMatrix& out) {
  IntMatrix r(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      std::int64_t acc = 0;
      for (Eigen::Index k = 0; k < a.cols(); ++k) {
        std::int64_t prod;
        if (__builtin_mul_overflow(a(i, k), b(k, j), &prod) || __builtin_add_overflow(acc, prod, &acc)) return false;
      }
      r(i, j) = acc;
    }
  out = std::move(r);
  return true;
}

Cocycle::Cocycle(int d) : d_(d), small_(IntMatrix::Identity(d, d)) {}

void Cocycle::right_multiply(const IntMatrix& m) {
  if (big_.empty()) {
    IntMatrix out;
    if (checked_multiply(small_, m, out)) {
      small_ = std::move(out);
      return;
    }
    big_.resize(static_cast<std::size_t>(d_ * d_));
    for (int i = 0; i < d_; ++i)
      for (int j = 0; j < d_; ++j) big_[static_cast<std::size_t>(i * d_ + j)] = small_(i, j);
  }
  std::vector<BigInt> next(big_.size());
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < d_; ++j) {
      BigInt acc = 0;
      for (int k = 0; k < d_; ++k)
        if (m(k, j) != 0) acc += big_[static_cast<std::size_t>(i * d_ + k)] * m(k, j);
      next[static_cast<std::size_t>(i * d_ + j)] = acc;
    }
  big_ = std::move(next);
}

BigInt Cocycle::at(int i, int j) const {
  if (big_.empty()) return BigInt(small_(i, j));
  return big_[static_cast<std::size_t>(i * d_ + j)];
}

BigInt Cocycle::column_sum(int j) const {
  BigInt s = 0;
  for (int i = 0; i < d_; ++i) s += at(i, j);
  return s;
}

IntMatrix Cocycle::small() const {
  if (!big_.empty()) throw Error(ErrorKind::InvalidArgument, "cocycle entries exceed 64 bits");
  return small_;
}

Iet::Iet(std::vector<double> lengths, Permutation perm) : lengths_(std::move(lengths)), perm_(std::move(perm)) {
  check_lengths(lengths_);
  check_permutation(perm_, size());
  layout(lengths_, perm_, top_start_, bottom_start_, breaks_, total_);
}

Iet Iet::reversal(std::vector<double> lengths) {
  int d = static_cast<int>(lengths.size());
  return Iet(std::move(lengths), tbill::reversal(d));
}

Label Iet::interval_of(double x, std::int64_t step) const {
  return perm_.top[locate(breaks_, total_, x, step)];
}

double Iet::eval(double x, std::int64_t step) const {
  Label a;
  return eval(x, a, step);
}

double Iet::eval(double x, Label& a, std::int64_t step) const {
  a = interval_of(x, step);
  double y = bottom_start_[static_cast<std::size_t>(a)] + (std::max(x, 0.0) - top_start_[static_cast<std::size_t>(a)]);
  return std::clamp(y, 0.0, std::nextafter(total_, 0.0));
}

std::vector<double> Iet::orbit(double x, std::int64_t n) const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n) + 1);
  out.push_back(x);
  for (std::int64_t k = 0; k < n; ++k) {
    x = eval(x, k);
    out.push_back(x);
  }
  return out;
}

FlippedIet::FlippedIet(std::vector<double> lengths, Permutation perm, std::vector<bool> flips)
    : lengths_(std::move(lengths)), perm_(std::move(perm)), flips_(std::move(flips)) {
  check_lengths(lengths_);
  check_permutation(perm_, size());
  if (static_cast<int>(flips_.size()) != size()) throw Error(ErrorKind::InvalidArgument, "one flip flag per interval");
  layout(lengths_, perm_, top_start_, bottom_start_, breaks_, total_);
}

Label FlippedIet::interval_of(double x, std::int64_t step) const {
  return perm_.top[locate(breaks_, total_, x, step)];
}

double FlippedIet::eval(double x, std::int64_t step) const {
  Label a = interval_of(x, step);
  auto i = static_cast<std::size_t>(a);
  double u = std::max(x, 0.0) - top_start_[i];
  double y = flips_[i] ? bottom_start_[i] + lengths_[i] - u : bottom_start_[i] + u;
  return std::clamp(y, 0.0, std::nextafter(total_, 0.0));
}

std::vector<double> FlippedIet::orbit(double x, std::int64_t n) const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n) + 1);
  out.push_back(x);
  for (std::int64_t k = 0; k < n; ++k) {
    x = eval(x, k);
    out.push_back(x);
  }
  return out;
}

FlippedIet make_phi(const CyclicPolygon& P, double tau) {
  const int N = P.n_sides();
  const double aN = P.longest_arc();
  if (!(tau > 1.0 && tau < aN)) throw Error(ErrorKind::TauOutOfRange, "tau must satisfy 1 < tau < a_N");
  std::vector<double> lengths(P.arcs.begin(), P.arcs.end() - 1);
  lengths.push_back(tau);
  lengths.push_back(aN - tau);
  Permutation perm;
  for (int i = 0; i <= N; ++i) perm.top.push_back(i);
  perm.bottom.push_back(N - 1);
  for (int i = 0; i + 1 < N; ++i) perm.bottom.push_back(i);
  perm.bottom.push_back(N);
  return FlippedIet(std::move(lengths), std::move(perm), std::vector<bool>(static_cast<std::size_t>(N) + 1, true));
}

double phi_closed_form(const CyclicPolygon& P, double tau, double x) {
  const int N = P.n_sides();
  const double L = P.circumference();
  int k = N;
  for (int j = 1; j < N; ++j)
    if (x < P.cumulative[static_cast<std::size_t>(j)]) {
      k = j;
      break;
    }
  double y = tau + P.cumulative[static_cast<std::size_t>(k) - 1] + P.cumulative[static_cast<std::size_t>(k)] - x;
  y = std::fmod(y, L);
  return y < 0.0 ? y + L : y;
}

Iet square_restrict(const FlippedIet& phi) {
  const int d = phi.size() - 2;
  if (d < 2) throw Error(ErrorKind::InvalidArgument, "not a billiard map");
  std::vector<double> arcs(phi.lengths().begin(), phi.lengths().begin() + d);
  Iet T = Iet::reversal(arcs);
  const int samples = 1000;
  for (int s = 0; s < samples; ++s) {
    double x = (s + 0.5) / samples * T.total();
    double y, z;
    try {
      y = phi.eval(x);
      z = phi.eval(y);
      double t = T.eval(x);
      if (y < T.total() || z >= T.total() || std::abs(t - z) > 1e-12)
        throw Error(ErrorKind::ConditionC1Violated, "the square does not act as the reversal on [0, 1)");
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::HitDiscontinuity) continue;
      throw;
    }
  }
  return T;
}

std::pair<Iet, InductionRecord> rauzy_step(const Iet& iet, bool renormalize) {
  const int d = iet.size();
  const Permutation& p = iet.permutation();
  Label alpha = p.top.back();
  Label beta = p.bottom.back();
  std::vector<double> lengths = iet.lengths();
  double la = lengths[static_cast<std::size_t>(alpha)];
  double lb = lengths[static_cast<std::size_t>(beta)];
  if (std::abs(la - lb) < kBoundaryEps * iet.total())
    throw Error(ErrorKind::DegenerateStep, "last top and bottom intervals have equal length");

  InductionRecord rec;
  rec.matrix = IntMatrix::Identity(d, d);
  rec.substitution = Substitution::identity(d);
  if (la > lb) {
    rec.kind = InductionKind::RauzyTop;
    rec.type = RauzyType::Top;
    lengths[static_cast<std::size_t>(alpha)] = la - lb;
    rec.matrix(alpha, beta) = 1;
    rec.substitution.images[static_cast<std::size_t>(beta)] = {beta, alpha};
  } else {
    rec.kind = InductionKind::RauzyBottom;
    rec.type = RauzyType::Bottom;
    lengths[static_cast<std::size_t>(beta)] = lb - la;
    rec.matrix(beta, alpha) = 1;
    rec.substitution.images[static_cast<std::size_t>(alpha)] = {beta, alpha};
  }
  rec.resulting_perm = rauzy_move(p, rec.type);
  if (renormalize) {
    double total = std::accumulate(lengths.begin(), lengths.end(), 0.0);
    for (double& l : lengths) l /= total;
  }
  return {Iet(std::move(lengths), rec.resulting_perm), std::move(rec)};
}

std::pair<Iet, InductionRecord> zorich_step(const Iet& iet, bool renormalize) {
  constexpr int kMaxBlock = 10'000'000;
  auto [cur, rec] = rauzy_step(iet, false);
  rec.kind = InductionKind::ZorichBlock;
  for (;;) {
    const Permutation& p = cur.permutation();
    double la = cur.lengths()[static_cast<std::size_t>(p.top.back())];
    double lb = cur.lengths()[static_cast<std::size_t>(p.bottom.back())];
    RauzyType next = la > lb ? RauzyType::Top : RauzyType::Bottom;
    if (next != rec.type) break;
    if (rec.count >= kMaxBlock) throw Error(ErrorKind::DegenerateStep, "Zorich block does not terminate");
    auto [nxt, r] = rauzy_step(cur, false);
    rec.matrix = rec.matrix * r.matrix;
    rec.substitution = rec.substitution.compose(r.substitution);
    rec.resulting_perm = r.resulting_perm;
    ++rec.count;
    cur = std::move(nxt);
  }
  if (renormalize) {
    std::vector<double> lengths = cur.lengths();
    for (double& l : lengths) l /= cur.total();
    cur = Iet(std::move(lengths), cur.permutation());
  }
  return {std::move(cur), std::move(rec)};
}

RokhlinTowers rokhlin_towers(const Iet& iet, int l) {
  if (l < 0) throw Error(ErrorKind::InvalidArgument, "tower order must be nonnegative");
  RokhlinTowers t;
  t.order = l;
  t.base = iet;
  t.visit_counts = Cocycle(iet.size());
  t.substitution = Substitution::identity(iet.size());
  for (int k = 0; k < l; ++k) {
    auto [next, rec] = rauzy_step(t.base, false);
    t.visit_counts.right_multiply(rec.matrix);
    t.substitution = t.substitution.compose(rec.substitution);
    t.base = std::move(next);
  }
  return t;
}

Word symbolic_coding(const Iet& iet, double x, std::int64_t n) {
  Word w;
  w.reserve(static_cast<std::size_t>(n));
  for (std::int64_t k = 0; k < n; ++k) {
    Label a;
    x = iet.eval(x, a, k);
    w.push_back(a);
  }
  return w;
}

double birkhoff_sum(const Iet& iet, const std::vector<double>& weights, double x, std::int64_t n) {
  if (static_cast<int>(weights.size()) != iet.size()) throw Error(ErrorKind::InvalidArgument, "one weight per interval");
  double s = 0.0;
  for (std::int64_t k = 0; k < n; ++k) {
    Label a;
    x = iet.eval(x, a, k);
    s += weights[static_cast<std::size_t>(a)];
  }
  return s;
}

std::complex<double> birkhoff_sum(const Iet& iet, const std::vector<std::complex<double>>& weights, double x,
                                  std::int64_t n) {
  if (static_cast<int>(weights.size()) != iet.size()) throw Error(ErrorKind::InvalidArgument, "one weight per interval");
  std::complex<double> s = 0.0;
  for (std::int64_t k = 0; k < n; ++k) {
    Label a;
    x = iet.eval(x, a, k);
    s += weights[static_cast<std::size_t>(a)];
  }
  return s;
}

}  // namespace tbill
