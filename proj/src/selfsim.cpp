#include "tbill/selfsim.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>

#include "tbill/errors.hpp"

namespace tbill {

namespace {

constexpr double kAlphaEps = 1e-8;

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd perron(const Eigen::MatrixXd& M) {
  Eigen::VectorXd v = Eigen::VectorXd::Ones(M.rows()) / static_cast<double>(M.rows());
  for (int it = 0; it < 2000; ++it) {
    Eigen::VectorXd next = M * v;
    next /= next.sum();
    double change = (next - v).cwiseAbs().maxCoeff();
    v = next;
    if (change < 1e-17) break;
  }
  return v;
}

// Real eigenvector for a simple real eigenvalue, sup norm 1 with a positive
// largest entry.
Eigen::VectorXd real_eigenvector(const Eigen::MatrixXd& M, double lambda) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(M);
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < es.eigenvalues().size(); ++i)
    if (std::abs(es.eigenvalues()(i) - lambda) < std::abs(es.eigenvalues()(best) - lambda)) best = i;
  Eigen::VectorXd v = es.eigenvectors().col(best).real();
  // A couple of inverse-iteration sweeps tidy up the last digits.
  const Eigen::Index d = M.rows();
  double shift = lambda * (1.0 + 1e-12) + 1e-14;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(M - shift * Eigen::MatrixXd::Identity(d, d));
  for (int it = 0; it < 2; ++it) {
    Eigen::VectorXd w = lu.solve(v);
    if (!w.allFinite()) break;
    v = w / w.cwiseAbs().maxCoeff();
  }
  Eigen::Index arg;
  v.cwiseAbs().maxCoeff(&arg);
  if (v(arg) < 0) v = -v;
  return v / v.cwiseAbs().maxCoeff();
}

// lens[i][a] = |sigma^i(a)|, grown on demand.
struct ImageLengths {
  const Substitution& sigma;
  std::vector<std::vector<std::int64_t>> lens;

  explicit ImageLengths(const Substitution& s) : sigma(s) { lens.emplace_back(static_cast<std::size_t>(s.size()), 1); }

  std::int64_t operator()(int level, Label a) {
    while (static_cast<int>(lens.size()) <= level) {
      const auto& prev = lens.back();
      std::vector<std::int64_t> next(prev.size(), 0);
      for (std::size_t b = 0; b < next.size(); ++b)
        for (Label c : sigma.images[b]) {
          if (__builtin_add_overflow(next[b], prev[static_cast<std::size_t>(c)], &next[b]))
            throw Error(ErrorKind::InvalidArgument, "substitution image lengths exceed 64 bits");
        }
      lens.push_back(std::move(next));
    }
    return lens[static_cast<std::size_t>(level)][static_cast<std::size_t>(a)];
  }
};

// Letters of x until its orbit first lands in [0, J), then lambda1 times the
// landing point.
Word descend(const SelfSimilarSystem& sys, double& x, int K) {
  const Iet& T = sys.iet;
  const double J = T.total() / sys.lambda1;
  const double eps = kBoundaryEps * T.total();
  Word s;
  for (;;) {
    if (std::abs(x - J) < eps) throw Error(ErrorKind::HitDiscontinuity, "orbit point on the inducing boundary");
    if (x < J) break;
    if (static_cast<int>(s.size()) >= K - 1)
      throw Error(ErrorKind::InvalidArgument, "tower descent longer than K - 1");
    Label a;
    x = T.eval(x, a, static_cast<std::int64_t>(s.size()));
    s.push_back(a);
  }
  x = std::min(x * sys.lambda1, std::nextafter(T.total(), 0.0));
  return s;
}

Word power_image(const Substitution& sigma, Word w, int times) {
  for (int i = 0; i < times; ++i) w = sigma.apply(w);
  return w;
}

}  // namespace

int RauzyGraph::index_of(const Permutation& p) const {
  auto it = std::find(nodes.begin(), nodes.end(), p);
  return it == nodes.end() ? -1 : static_cast<int>(it - nodes.begin());
}

RauzyGraph enumerate_rauzy_class(const Permutation& perm) {
  if (!is_irreducible(perm)) throw Error(ErrorKind::ReduciblePermutation, "permutation is reducible");
  RauzyGraph g;
  std::map<Permutation, int> seen;
  std::deque<int> queue;
  seen[perm] = 0;
  g.nodes.push_back(perm);
  queue.push_back(0);
  while (!queue.empty()) {
    int i = queue.front();
    queue.pop_front();
    for (RauzyType t : {RauzyType::Top, RauzyType::Bottom}) {
      Permutation q = rauzy_move(g.nodes[static_cast<std::size_t>(i)], t);
      auto [it, fresh] = seen.emplace(q, static_cast<int>(g.nodes.size()));
      if (fresh) {
        g.nodes.push_back(q);
        queue.push_back(it->second);
      }
      g.edges.push_back({i, it->second, t});
    }
  }
  return g;
}

RauzyLoop path_matrix(const Permutation& base, const std::vector<RauzyType>& steps) {
  const int d = base.size();
  RauzyLoop loop;
  loop.base_perm = base;
  loop.steps = steps;
  loop.M = IntMatrix::Identity(d, d);
  loop.sigma = Substitution::identity(d);
  Permutation p = base;
  for (RauzyType t : steps) {
    Label alpha = p.top.back();
    Label beta = p.bottom.back();
    IntMatrix step = IntMatrix::Identity(d, d);
    Substitution sub = Substitution::identity(d);
    if (t == RauzyType::Top) {
      step(alpha, beta) = 1;
      sub.images[static_cast<std::size_t>(beta)] = {beta, alpha};
    } else {
      step(beta, alpha) = 1;
      sub.images[static_cast<std::size_t>(alpha)] = {beta, alpha};
    }
    IntMatrix next;
    if (!checked_multiply(loop.M, step, next)) throw Error(ErrorKind::InvalidArgument, "loop matrix exceeds 64 bits");
    loop.M = std::move(next);
    loop.sigma = loop.sigma.compose(sub);
    p = rauzy_move(p, t);
  }
  return loop;
}

RauzyLoop loop_matrix(const Permutation& base, const std::vector<RauzyType>& steps) {
  if (steps.empty()) throw Error(ErrorKind::NotALoop, "empty path");
  Permutation p = base;
  for (RauzyType t : steps) p = rauzy_move(p, t);
  if (!(p == base)) throw Error(ErrorKind::NotALoop, "path does not return to its base permutation");
  RauzyLoop loop = path_matrix(base, steps);
  if (!(loop.sigma.matrix() == loop.M)) throw Error(ErrorKind::InvalidArgument, "substitution and matrix disagree");
  return loop;
}

int primitivity_reach(const IntMatrix& M) {
  const Eigen::Index d = M.rows();
  Eigen::MatrixXi B = (M.array() > 0).cast<int>();
  Eigen::MatrixXi P = B;
  const int bound = static_cast<int>((d - 1) * (d - 1) + 1);
  for (int k = 1; k <= bound; ++k) {
    if ((P.array() > 0).all()) return k;
    P = ((P * B).array() > 0).cast<int>();
  }
  return 0;
}

std::vector<RauzyLoop> search_loops(const Permutation& base, int max_len, bool only_valid) {
  if (!is_irreducible(base)) throw Error(ErrorKind::ReduciblePermutation, "permutation is reducible");
  std::vector<RauzyLoop> out;
  for (int len = 1; len <= max_len; ++len) {
    // Enumerate step words of this length; bit i set means step i is bottom.
    for (std::uint64_t code = 0; code < (std::uint64_t{1} << len); ++code) {
      std::vector<RauzyType> steps;
      Permutation p = base;
      for (int i = 0; i < len; ++i) {
        RauzyType t = (code >> (len - 1 - i)) & 1 ? RauzyType::Bottom : RauzyType::Top;
        steps.push_back(t);
        p = rauzy_move(p, t);
      }
      if (!(p == base)) continue;
      RauzyLoop loop = loop_matrix(base, steps);
      if (only_valid) {
        try {
          build_selfsim(loop);
        } catch (const Error& e) {
          if (e.kind() == ErrorKind::NotPrimitive || e.kind() == ErrorKind::SpectralHypothesisFailed) continue;
          throw;
        }
      }
      out.push_back(std::move(loop));
    }
  }
  return out;
}

SelfSimilarSystem build_selfsim(const RauzyLoop& loop) {
  const Eigen::Index d = loop.M.rows();
  SelfSimilarSystem sys;
  sys.loop = loop;
  sys.reach = primitivity_reach(loop.M);
  if (sys.reach == 0) throw Error(ErrorKind::NotPrimitive, "loop matrix is not primitive");

  const Eigen::MatrixXd M = loop.M.cast<double>();
  Eigen::EigenSolver<Eigen::MatrixXd> es(M, false);
  for (Eigen::Index i = 0; i < d; ++i) sys.spectrum.push_back(es.eigenvalues()(i));
  std::sort(sys.spectrum.begin(), sys.spectrum.end(),
            [](auto a, auto b) { return std::abs(a) > std::abs(b); });

  sys.V = perron(M);
  sys.lambda1 = (M * sys.V).sum();
  sys.W1 = perron(M.transpose());

  if (d < 2) throw Error(ErrorKind::SpectralHypothesisFailed, "|lambda2|<=1: no second eigenvalue");
  std::complex<double> l2 = sys.spectrum[1];
  if (std::abs(l2) <= 1.0 + 1e-6) throw Error(ErrorKind::SpectralHypothesisFailed, "|lambda2|<=1");
  if (d >= 3) {
    std::complex<double> l3 = sys.spectrum[2];
    if (std::abs(l2 - l3) < 1e-8) throw Error(ErrorKind::SpectralHypothesisFailed, "lambda2 not simple");
    if (std::abs(l2) - std::abs(l3) < 1e-8)
      throw Error(ErrorKind::SpectralHypothesisFailed, std::abs(l2.imag()) > 1e-9 ? "complex lambda2" : "modulus tie");
    sys.lambda3_modulus = std::abs(l3);
  }
  if (std::abs(l2.imag()) > 1e-9 * std::abs(l2)) throw Error(ErrorKind::SpectralHypothesisFailed, "complex lambda2");
  sys.lambda2 = l2.real();
  sys.W2 = real_eigenvector(M.transpose(), sys.lambda2);
  sys.V2 = real_eigenvector(M, sys.lambda2);

  sys.K = static_cast<int>(loop.sigma.max_image_length());
  sys.rho = std::log(std::abs(sys.lambda2)) / std::log(sys.lambda1);

  Eigen::MatrixXd ratios = growth_ratios(sys, sys.growth_range);
  Eigen::VectorXd limit = sys.W1 / sys.W1.dot(sys.V);
  sys.A_const = std::min(ratios.minCoeff(), limit.minCoeff()) * (1.0 - 1e-9);
  sys.B_const = std::max(ratios.maxCoeff(), limit.maxCoeff()) * (1.0 + 1e-9);
  sys.C_const = std::max(sys.A_const, (2.0 * sys.K - 2.0) * sys.B_const * sys.lambda1 / (sys.lambda1 - 1.0));
  sys.kappa = std::log(sys.C_const) / std::log(sys.lambda1);

  sys.iet = Iet(to_std(sys.V), loop.base_perm);

  // One pass of renormalized induction must follow the loop and return the
  // same lengths.
  Iet cur = sys.iet;
  bool follows = true;
  for (RauzyType t : loop.steps) {
    auto [next, rec] = rauzy_step(cur, true);
    if (rec.type != t) {
      follows = false;
      break;
    }
    cur = std::move(next);
  }
  sys.selfsim_residual = std::numeric_limits<double>::infinity();
  if (follows && cur.permutation() == loop.base_perm) {
    sys.selfsim_residual = 0.0;
    for (Eigen::Index i = 0; i < d; ++i)
      sys.selfsim_residual =
          std::max(sys.selfsim_residual, std::abs(cur.lengths()[static_cast<std::size_t>(i)] - sys.V(i)));
  }
  return sys;
}

Eigen::MatrixXd growth_ratios(const SelfSimilarSystem& sys, int n_max) {
  const Eigen::MatrixXd M = sys.loop.M.cast<double>();
  const Eigen::Index d = M.rows();
  Eigen::MatrixXd out(n_max + 1, d);
  Eigen::RowVectorXd u = Eigen::RowVectorXd::Ones(d);
  for (int n = 0; n <= n_max; ++n) {
    out.row(n) = u;
    u = u * M / sys.lambda1;
  }
  return out;
}

Word PrefixDecomposition::reassemble(const Substitution& sigma) const {
  Word out;
  auto append = [&out](const Word& w) { out.insert(out.end(), w.begin(), w.end()); };
  for (int i = 0; i < l; ++i) append(power_image(sigma, s_words[static_cast<std::size_t>(i)], i));
  append(power_image(sigma, m_word, l));
  for (int i = l - 1; i >= 0; --i) append(power_image(sigma, p_words[static_cast<std::size_t>(i)], i));
  return out;
}

PrefixDecomposition prefix_decompose(const SelfSimilarSystem& sys, double x, std::int64_t n) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "prefix length must be at least 1");
  const Iet& T = sys.iet;
  if (!(x >= 0.0 && x < T.total())) throw Error(ErrorKind::InvalidArgument, "x outside the domain");
  ImageLengths lens(sys.loop.sigma);
  PrefixDecomposition pd;
  std::int64_t len = 0;
  double xl = x;
  for (;;) {
    double xn = xl;
    Word s = descend(sys, xn, sys.K);
    std::int64_t len_next = len;
    for (Label a : s) len_next += lens(pd.l, a);
    Label b_next = T.interval_of(xn);
    if (len_next + lens(pd.l + 1, b_next) > n) break;
    pd.s_words.push_back(std::move(s));
    xl = xn;
    len = len_next;
    ++pd.l;
  }

  std::int64_t rem = n - len;
  double y = xl;
  Label next;
  for (std::int64_t step = 0;; ++step) {
    Label a;
    double z = T.eval(y, a, step);
    if (lens(pd.l, a) > rem) {
      next = a;
      break;
    }
    rem -= lens(pd.l, a);
    pd.m_word.push_back(a);
    y = z;
    if (rem == 0) {
      next = -1;
      break;
    }
  }

  pd.p_words.assign(static_cast<std::size_t>(pd.l), Word{});
  for (int i = pd.l - 1; i >= 0 && rem > 0; --i) {
    const Word& img = sys.loop.sigma.images[static_cast<std::size_t>(next)];
    std::size_t k = 0;
    Word& p = pd.p_words[static_cast<std::size_t>(i)];
    while (k < img.size() && lens(i, img[k]) <= rem) {
      rem -= lens(i, img[k]);
      p.push_back(img[k]);
      ++k;
    }
    if (k < img.size()) next = img[k];
  }
  if (rem != 0) throw Error(ErrorKind::InvalidArgument, "prefix decomposition did not close");
  return pd;
}

TowerEntry tower_entry(const SelfSimilarSystem& sys, double x, int l, int w_letters) {
  ImageLengths lens(sys.loop.sigma);
  TowerEntry te;
  for (int i = 0; i < l; ++i) {
    Word s = descend(sys, x, sys.K);
    for (Label a : s) te.entry_time += lens(i, a);
    te.s_words.push_back(std::move(s));
  }
  te.w_prefix = symbolic_coding(sys.iet, x, w_letters);
  return te;
}

SandwichReport verify_sandwich(const SelfSimilarSystem& sys, double aN, double tau, double x0, std::int64_t n_max) {
  const int d = sys.iet.size();
  if (!(sys.loop.base_perm == reversal(d)))
    throw Error(ErrorKind::InvalidArgument, "the billiard needs a loop based at the reversal permutation");
  if (n_max < 2) throw Error(ErrorKind::InvalidArgument, "n_max must be at least 2");

  SandwichReport rep;
  rep.aN = aN;
  rep.tau = tau;
  rep.n_max = n_max;
  std::vector<double> arcs = to_std(sys.V);
  arcs.push_back(aN);
  CyclicPolygon P = build_polygon(arcs);
  FlippedIet phi = make_phi(P, tau);
  if (!(x0 >= 0.0 && x0 < P.circumference())) throw Error(ErrorKind::InvalidArgument, "x0 must lie in [0, 1 + a_N)");
  DisplacementData data = displacement_vectors(P, x0);
  DeviationVector dv = deviation_vector(data);
  rep.m_abs = std::abs(data.m);
  rep.H = dv.H;
  rep.x0 = x0 >= 1.0 ? phi.eval(x0) : x0;

  Eigen::Map<const Eigen::VectorXd> H(dv.H.data(), d);
  rep.alpha = H.dot(sys.V2) / sys.W2.dot(sys.V2);
  if (!(std::abs(rep.alpha) > kAlphaEps))
    throw Error(ErrorKind::HInE3, "H has no component along W2 for a_N = " + std::to_string(aN));
  rep.U = H - rep.alpha * sys.W2;

  const double l1 = sys.lambda1;
  const double l2 = std::abs(sys.lambda2);
  const double K1 = 2.0 * (sys.K - 1);
  const double w2inf = sys.W2.cwiseAbs().maxCoeff();
  const double D1 = std::abs(rep.alpha) * l2 / (l2 - 1.0) * K1 * w2inf;
  rep.D = D1 + 1.0;

  const Eigen::MatrixXd Mt = sys.loop.M.cast<double>().transpose();
  // U has no lambda1 or lambda2 part, so its images under the transpose decay.
  double tail = 0.0;
  Eigen::VectorXd u = rep.U;
  for (int k = 0; k < 100000; ++k) {
    // Rounding leaks into the expanding directions; project it back out.
    u -= u.dot(sys.V) / sys.W1.dot(sys.V) * sys.W1 + u.dot(sys.V2) / sys.W2.dot(sys.V2) * sys.W2;
    double term = u.cwiseAbs().maxCoeff();
    tail += term;
    if (!std::isfinite(term)) throw Error(ErrorKind::InvalidArgument, "E3 tail diverged");
    if (k > 10 && term < 1e-17 * tail) break;
    u = Mt * u;
  }
  rep.margin = std::max(1.0, (D1 + K1 * tail) / rep.D);
  rep.D_prime = rep.D * std::pow(sys.A_const, -sys.rho);
  rep.C1 = rep.margin * rep.D_prime;
  const double damp = std::exp(-sys.C_const / std::log(l1));
  rep.C2 = std::abs(rep.alpha) / 4.0 * damp;
  rep.C2_half = std::abs(rep.alpha) / 2.0 * damp;

  const double unorm = rep.U.cwiseAbs().maxCoeff();
  rep.l0 = 0;
  while (rep.l0 < 10000 &&
         unorm * std::pow(sys.lambda3_modulus, rep.l0) > std::abs(rep.alpha) / 4.0 * std::pow(l2, rep.l0))
    ++rep.l0;

  // Every partial sum along the orbit.
  const Iet& T = sys.iet;
  std::vector<double> S(static_cast<std::size_t>(n_max) + 1, 0.0);
  double x = rep.x0;
  for (std::int64_t n = 1; n <= n_max; ++n) {
    Label a;
    x = T.eval(x, a, n - 1);
    S[static_cast<std::size_t>(n)] = S[static_cast<std::size_t>(n) - 1] + dv.H[static_cast<std::size_t>(a)];
  }
  rep.upper_worst_ratio = 0.0;
  for (std::int64_t n = 1; n <= n_max; ++n)
    rep.upper_worst_ratio = std::max(
        rep.upper_worst_ratio, std::abs(S[static_cast<std::size_t>(n)]) / (rep.C1 * std::pow(static_cast<double>(n), sys.rho)));
  rep.upper_ok = rep.upper_worst_ratio <= 1.0;

  ImageLengths lens(sys.loop.sigma);
  const double v2inf = sys.V2.cwiseAbs().maxCoeff();
  rep.lower_worst_ratio = std::numeric_limits<double>::infinity();
  for (int l = 0;; ++l) {
    TowerEntry te = tower_entry(sys, rep.x0, l, sys.reach * sys.K + 1);
    if (te.entry_time > n_max) break;
    std::int64_t nl = te.entry_time;
    if (!(std::abs(S[static_cast<std::size_t>(nl)]) > std::pow(l2, l))) {
      std::size_t i = 0;
      while (i + 1 < te.w_prefix.size() && std::abs(sys.V2(te.w_prefix[i])) <= 1e-12 * v2inf) ++i;
      for (std::size_t j = 0; j <= i; ++j) nl += lens(l, te.w_prefix[j]);
    }
    if (nl > n_max) break;
    double Sl = S[static_cast<std::size_t>(nl)];
    rep.levels.push_back(l);
    rep.n_l.push_back(nl);
    rep.S_at_n_l.push_back(Sl);
    if (l >= rep.l0)
      rep.lower_worst_ratio =
          std::min(rep.lower_worst_ratio, std::abs(Sl) / std::pow(static_cast<double>(nl), sys.rho));
  }
  bool reached = std::isfinite(rep.lower_worst_ratio);
  rep.lower_ok = reached && rep.lower_worst_ratio >= rep.C2;
  rep.lower_ok_half = reached && rep.lower_worst_ratio >= rep.C2_half;

  rep.series = deviation_series(T, dv.H, rep.x0, n_max);
  rep.slope_error = std::abs(rep.series.fitted_exponent - sys.rho);
  return rep;
}

}  // namespace tbill
