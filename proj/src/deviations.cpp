#include "tbill/deviations.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "tbill/errors.hpp"
#include "tbill/rng.hpp"

namespace tbill {

namespace {

constexpr Complex kI{0.0, 1.0};

std::vector<double> first_arcs(const CyclicPolygon& P) { return {P.arcs.begin(), P.arcs.end() - 1}; }

std::vector<double> cumulative_of(const std::vector<double>& arcs) {
  std::vector<double> c(arcs.size() + 1, 0.0);
  for (std::size_t k = 0; k < arcs.size(); ++k) c[k + 1] = c[k] + arcs[k];
  return c;
}

}  // namespace

DisplacementData displacement_vectors(const CyclicPolygon& P, double x0) {
  const int N = P.n_sides();
  const double r = P.radius;
  DisplacementData d;
  d.arcs = first_arcs(P);
  d.x0 = x0;
  d.s = 1.0 / r;
  std::vector<Complex> E;
  for (int k = 0; k < N; ++k) {
    d.X.push_back(-kI * (x0 + P.cumulative[static_cast<std::size_t>(k)]) / r);
    E.push_back(std::exp(d.X.back()));
  }
  d.m = 0.0;
  for (int k = 1; k < N; ++k) {
    auto K = static_cast<std::size_t>(k);
    d.f.push_back(r * (E[K] + E[K - 1] - E[static_cast<std::size_t>(N) - 1] - E[0]));
    d.m += d.arcs[K - 1] * d.f.back();
  }
  return d;
}

Complex mean_expanded(const CyclicPolygon& P, double x0) {
  const int N = P.n_sides();
  const double s = 1.0 / P.radius;
  const auto& a = P.arcs;
  const auto& c = P.cumulative;
  Complex bracket = 0.0;
  for (int k = 1; k <= N - 2; ++k) {
    auto K = static_cast<std::size_t>(k);
    bracket += (a[K - 1] + a[K]) * std::exp(-kI * c[K] * s);
  }
  double head = 0.0, tail = 0.0;
  for (int k = 1; k <= N - 2; ++k) head += a[static_cast<std::size_t>(k) - 1];
  for (int k = 2; k <= N - 1; ++k) tail += a[static_cast<std::size_t>(k) - 1];
  bracket -= head * std::exp(-kI * c[static_cast<std::size_t>(N) - 1] * s);
  bracket -= tail;
  return P.radius * std::exp(-kI * x0 * s) * bracket;
}

MeanCheck mean_is_nonzero(const CyclicPolygon& P, double x0) {
  double mod = std::abs(displacement_vectors(P, x0).m);
  return {mod > kMeanEps, mod};
}

double DeviationVector::h(double x) const {
  for (std::size_t k = 1; k < breakpoints.size(); ++k)
    if (x < breakpoints[k]) return H[k - 1];
  return H.back();
}

DeviationVector deviation_vector(const DisplacementData& data) {
  if (!(std::abs(data.m) > kMeanEps)) throw Error(ErrorKind::MeanDegenerate, "mean displacement vanishes");
  DeviationVector v;
  for (const Complex& f : data.f) {
    v.G.push_back(f / data.m - 1.0);
    v.H.push_back(v.G.back().imag());
  }
  v.breakpoints = cumulative_of(data.arcs);
  v.breakpoints.back() = 1.0;
  return v;
}

double evaluate(const LinearForm& form, const std::vector<double>& arcs) {
  double s = 0.0;
  for (std::size_t j = 0; j < form.size(); ++j)
    if (form[j] != 0) s += form[j] * arcs[j];
  return s;
}

Eigen::VectorXd QDecomposition::theta(double s) const {
  Eigen::VectorXd t(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i) t(static_cast<Eigen::Index>(i)) = std::sin(theta_value(i) * s);
  return t;
}

double QDecomposition::theta_value(std::size_t i) const {
  double v = 0.0;
  for (int j = 0; j < basis[i].count; ++j) v += arcs[static_cast<std::size_t>(basis[i].first - 1 + j)];
  return v;
}

QDecomposition build_q(const CyclicPolygon& P) { return build_q(first_arcs(P)); }

QDecomposition build_q(const std::vector<double>& arcs) {
  const int d = static_cast<int>(arcs.size());  // N - 1
  if (d < 4) throw Error(ErrorKind::InvalidArgument, "need at least 5 sides");
  QDecomposition q;
  q.n_sides = d + 1;
  q.arcs = arcs;

  // Points c_0..c_d; a pair p < q stands for sin((c_q - c_p) s).
  std::vector<std::vector<int>> index(static_cast<std::size_t>(d) + 1, std::vector<int>(static_cast<std::size_t>(d) + 1, -1));
  for (int count = 1; count <= d; ++count)
    for (int p = 0; p + count <= d; ++p) {
      index[static_cast<std::size_t>(p)][static_cast<std::size_t>(p + count)] = static_cast<int>(q.basis.size());
      q.basis.push_back({p + 1, count});
    }

  const std::size_t B = q.basis.size();
  q.symbolic.assign(static_cast<std::size_t>(d), std::vector<LinearForm>(B, LinearForm(static_cast<std::size_t>(d), 0)));
  // f_k / r = E_k + E_{k-1} - E_d - E_0, and Im(conj(E_u) E_v) = sin((c_u - c_v) s).
  auto terms = [d](int k) {
    return std::array<std::pair<int, int>, 4>{{{k, 1}, {k - 1, 1}, {d, -1}, {0, -1}}};
  };
  for (int k = 1; k <= d; ++k)
    for (int j = 1; j <= d; ++j)
      for (auto [u, su] : terms(j))
        for (auto [v, sv] : terms(k)) {
          if (u == v) continue;
          int sign = su * sv * (v > u ? -1 : 1);
          int col = index[static_cast<std::size_t>(std::min(u, v))][static_cast<std::size_t>(std::max(u, v))];
          q.symbolic[static_cast<std::size_t>(k) - 1][static_cast<std::size_t>(col)][static_cast<std::size_t>(j) - 1] += sign;
        }

  q.Q.resize(d, static_cast<Eigen::Index>(B));
  for (int k = 0; k < d; ++k)
    for (std::size_t i = 0; i < B; ++i)
      q.Q(k, static_cast<Eigen::Index>(i)) = evaluate(q.symbolic[static_cast<std::size_t>(k)][i], arcs);
  return q;
}

int rank_q(const QDecomposition& q) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(q.Q);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-9 * sv(0)) ++rank;
  return rank;
}

double transposed_minor(const QDecomposition& q, const std::vector<int>& rows, const std::vector<int>& cols) {
  Eigen::MatrixXd t = q.transposed();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t(rows[i] - 1, cols[j] - 1);
  return m.determinant();
}

double odd_minor_determinant(const QDecomposition& q) {
  const int N = q.n_sides;
  std::vector<int> rows, cols;
  for (int i = 2; i <= N - 1; ++i) rows.push_back(i);
  for (int j = 1; j <= N - 2; ++j) cols.push_back(j);
  return transposed_minor(q, rows, cols);
}

double odd_minor_identity(const std::vector<double>& a) {
  const std::size_t N = a.size() + 1;
  double v = a[N - 2];
  for (std::size_t k = 2; k <= N - 2; ++k) v *= a[k - 1] + a[k];
  return v;
}

double reconstruction_error(const QDecomposition& q, const CyclicPolygon& P, double x0) {
  DisplacementData data = displacement_vectors(P, x0);
  DeviationVector dv = deviation_vector(data);
  Eigen::VectorXd qt = q.Q * q.theta(data.s);
  const double m2 = std::norm(data.m);
  const double r2 = P.radius * P.radius;
  double err = 0.0;
  for (std::size_t k = 0; k < dv.H.size(); ++k)
    err = std::max(err, std::abs(m2 * dv.H[k] - r2 * qt(static_cast<Eigen::Index>(k))));
  return err;
}

EnvelopeFit fit_envelope_exponent(const std::vector<std::int64_t>& n, const std::vector<double>& env) {
  EnvelopeFit fit;
  fit.exponent = std::numeric_limits<double>::quiet_NaN();
  if (n.empty()) return fit;
  const double cut = 0.5 * std::log(static_cast<double>(n.back()));
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < n.size(); ++i) {
    double lx = std::log(static_cast<double>(n[i]));
    if (lx >= cut && env[i] > 0.0) {
      xs.push_back(lx);
      ys.push_back(std::log(env[i]));
    }
  }
  fit.points = static_cast<int>(xs.size());
  if (xs.size() < 2) return fit;
  const double k = static_cast<double>(xs.size());
  double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / k;
  double my = std::accumulate(ys.begin(), ys.end(), 0.0) / k;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0) return fit;
  fit.exponent = sxy / sxx;
  if (xs.size() > 2) {
    double ssr = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      double e = ys[i] - my - fit.exponent * (xs[i] - mx);
      ssr += e * e;
    }
    fit.halfwidth = 1.96 * std::sqrt(ssr / (k - 2.0) / sxx);
  }
  return fit;
}

std::vector<std::int64_t> default_checkpoints(std::int64_t n_max) {
  std::vector<std::int64_t> out;
  for (int j = 0;; ++j) {
    auto n = static_cast<std::int64_t>(std::llround(std::exp2(0.5 * j)));
    if (n > n_max) break;
    if (out.empty() || out.back() != n) out.push_back(n);
  }
  if (out.empty() || out.back() != n_max) out.push_back(n_max);
  return out;
}

namespace {

template <class W>
DeviationReport series_impl(const Iet& T, const std::vector<W>& weights, double x0, std::int64_t n_max,
                            std::vector<std::int64_t> checkpoints) {
  if (n_max < 1) throw Error(ErrorKind::InvalidArgument, "n_max must be at least 1");
  if (static_cast<int>(weights.size()) != T.size()) throw Error(ErrorKind::InvalidArgument, "one weight per interval");
  if (checkpoints.empty()) checkpoints = default_checkpoints(n_max);
  std::sort(checkpoints.begin(), checkpoints.end());
  checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());
  if (checkpoints.front() < 1 || checkpoints.back() > n_max)
    throw Error(ErrorKind::InvalidArgument, "checkpoints must lie in [1, n_max]");

  DeviationReport rep;
  constexpr int kAttempts = 16;
  for (int attempt = 0;; ++attempt) {
    double start = x0;
    if (attempt > 0) {
      start = std::fmod(x0 + 1e-7 * attempt * T.total(), T.total());
      rep.perturbed = true;
    }
    rep.n_checkpoints.clear();
    rep.dev_abs.clear();
    rep.running_max.clear();
    try {
      double x = start, env = 0.0;
      W s{};
      std::size_t next = 0;
      for (std::int64_t n = 1; n <= checkpoints.back(); ++n) {
        Label a;
        x = T.eval(x, a, n - 1);
        s += weights[static_cast<std::size_t>(a)];
        env = std::max(env, std::abs(s));
        if (n == checkpoints[next]) {
          rep.n_checkpoints.push_back(n);
          rep.dev_abs.push_back(std::abs(s));
          rep.running_max.push_back(env);
          ++next;
        }
      }
      rep.x0 = start;
      break;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::HitDiscontinuity || attempt + 1 == kAttempts) throw;
    }
  }
  EnvelopeFit fit = fit_envelope_exponent(rep.n_checkpoints, rep.running_max);
  rep.fitted_exponent = fit.exponent;
  rep.ci_halfwidth = fit.halfwidth;
  return rep;
}

}  // namespace

DeviationReport deviation_series(const Iet& T, const std::vector<double>& weights, double x0, std::int64_t n_max,
                                 std::vector<std::int64_t> checkpoints) {
  return series_impl(T, weights, x0, n_max, std::move(checkpoints));
}

DeviationReport deviation_series(const Iet& T, const std::vector<Complex>& weights, double x0, std::int64_t n_max,
                                 std::vector<std::int64_t> checkpoints) {
  return series_impl(T, weights, x0, n_max, std::move(checkpoints));
}

const char* to_string(DeviationMeasure m) {
  return m == DeviationMeasure::Displacement ? "displacement" : "transverse";
}

DeviationReport deviation_series(const CyclicPolygon& P, double x0, double tau, std::int64_t n_max,
                                 std::vector<std::int64_t> checkpoints, DeviationMeasure measure) {
  FlippedIet phi = make_phi(P, tau);
  if (!(x0 >= 0.0 && x0 < P.circumference())) throw Error(ErrorKind::InvalidArgument, "x0 must lie in [0, 1 + a_N)");
  Iet T = square_restrict(phi);
  DisplacementData data = displacement_vectors(P, x0);
  DeviationVector dv = deviation_vector(data);
  double start = x0 >= 1.0 ? phi.eval(x0) : x0;
  DeviationReport rep;
  if (measure == DeviationMeasure::Transverse) {
    rep = deviation_series(T, dv.H, start, n_max, std::move(checkpoints));
  } else {
    std::vector<Complex> w;
    for (const Complex& f : data.f) w.push_back(f - data.m);
    rep = deviation_series(T, w, start, n_max, std::move(checkpoints));
  }
  rep.m = data.m;
  return rep;
}

EstimatedSpectrum estimate_lyapunov_ratios(int d, std::int64_t n_matrices, std::uint64_t seed, int qr_interval,
                                           int n_exponents) {
  if (d < 4) throw Error(ErrorKind::InvalidArgument, "need at least 4 letters");
  if (n_matrices < 20) throw Error(ErrorKind::InvalidArgument, "need at least 20 blocks");
  if (qr_interval < 1) throw Error(ErrorKind::InvalidArgument, "qr_interval must be positive");
  if (n_exponents < 1 || n_exponents > d) throw Error(ErrorKind::InvalidArgument, "bad number of exponents");

  SplitMix64 rng(seed);
  const int k = n_exponents;
  Eigen::MatrixXd Y(d, k);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < k; ++j) Y(i, j) = rng.uniform(-1.0, 1.0);
  Y = Eigen::HouseholderQR<Eigen::MatrixXd>(Y).householderQ() * Eigen::MatrixXd::Identity(d, k);

  constexpr int kBatches = 20;
  const std::int64_t batch_size = n_matrices / kBatches;
  Eigen::MatrixXd batch_sum = Eigen::MatrixXd::Zero(kBatches, k);
  Eigen::VectorXd total = Eigen::VectorXd::Zero(k);

  EstimatedSpectrum out;
  out.n_matrices = n_matrices;
  Iet iet(rng.simplex(d), reversal(d));
  for (std::int64_t b = 0; b < n_matrices; ++b) {
    for (;;) {
      try {
        auto [next, rec] = zorich_step(iet, true);
        iet = std::move(next);
        Y = rec.matrix.cast<double>().transpose() * Y;
        break;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::DegenerateStep) throw;
        iet = Iet(rng.simplex(d), iet.permutation());
        ++out.resamples;
      }
    }
    if ((b + 1) % qr_interval == 0 || b + 1 == n_matrices) {
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(Y);
      Eigen::MatrixXd R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
      Y = qr.householderQ() * Eigen::MatrixXd::Identity(d, k);
      Eigen::Index batch = std::min<Eigen::Index>(static_cast<Eigen::Index>(b / batch_size), kBatches - 1);
      for (int i = 0; i < k; ++i) {
        double l = std::log(std::abs(R(i, i)));
        batch_sum(batch, i) += l;
        total(i) += l;
      }
    }
  }

  for (int i = 0; i < k; ++i) out.theta_hat.push_back(total(i) / static_cast<double>(n_matrices));
  out.ratio2 = k >= 2 ? out.theta_hat[1] / out.theta_hat[0] : 0.0;
  out.ratio3 = k >= 3 ? out.theta_hat[2] / out.theta_hat[0] : 0.0;

  // Bootstrap over batches.
  std::vector<double> batch_len(kBatches, static_cast<double>(batch_size));
  batch_len.back() = static_cast<double>(n_matrices - batch_size * (kBatches - 1));
  constexpr int kResamples = 1000;
  SplitMix64 boot(seed ^ 0xB0075742ULL);
  std::vector<std::vector<double>> draws(static_cast<std::size_t>(k) + 2);
  for (int r = 0; r < kResamples; ++r) {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(k);
    double len = 0.0;
    for (int j = 0; j < kBatches; ++j) {
      auto pick = static_cast<Eigen::Index>(boot.next() % kBatches);
      s += batch_sum.row(pick).transpose();
      len += batch_len[static_cast<std::size_t>(pick)];
    }
    s /= len;
    for (int i = 0; i < k; ++i) draws[static_cast<std::size_t>(i)].push_back(s(i));
    if (k >= 2) draws[static_cast<std::size_t>(k)].push_back(s(1) / s(0));
    if (k >= 3) draws[static_cast<std::size_t>(k) + 1].push_back(s(2) / s(0));
  }
  auto halfwidth = [](const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return 1.96 * std::sqrt(ss / static_cast<double>(v.size() - 1));
  };
  for (int i = 0; i < k; ++i) out.halfwidth.push_back(halfwidth(draws[static_cast<std::size_t>(i)]));
  out.ratio2_halfwidth = halfwidth(draws[static_cast<std::size_t>(k)]);
  out.ratio3_halfwidth = halfwidth(draws[static_cast<std::size_t>(k) + 1]);
  return out;
}

}  // namespace tbill
