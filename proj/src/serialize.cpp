#include "tbill/serialize.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "tbill/errors.hpp"

namespace tbill {

namespace {

Json complex_json(std::complex<double> z) { return Json::array({z.real(), z.imag()}); }

Json vector_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Json word_json(const Word& w) { return Json(w); }

RauzyType type_from_string(const std::string& s) {
  if (s == "top") return RauzyType::Top;
  if (s == "bottom") return RauzyType::Bottom;
  throw Error(ErrorKind::InvalidArgument, "unknown Rauzy type '" + s + "'");
}

}  // namespace

Json to_json(const Permutation& p) { return Json{{"top", p.top}, {"bottom", p.bottom}}; }

Permutation permutation_from_json(const Json& j) {
  Permutation p{j.at("top").get<std::vector<Label>>(), j.at("bottom").get<std::vector<Label>>()};
  if (p.top.size() != p.bottom.size() || p.top.empty())
    throw Error(ErrorKind::InvalidArgument, "permutation rows must be non-empty and of equal length");
  return p;
}

Json to_json(const IntMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

IntMatrix matrix_from_json(const Json& j) {
  const auto rows = j.get<std::vector<std::vector<std::int64_t>>>();
  IntMatrix m(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != static_cast<std::size_t>(m.cols())) throw Error(ErrorKind::InvalidArgument, "ragged matrix");
    for (std::size_t k = 0; k < rows[i].size(); ++k)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  }
  return m;
}

Json to_json(const Iet& iet) {
  return Json{{"format_version", kFormatVersion}, {"lengths", iet.lengths()}, {"permutation", to_json(iet.permutation())}};
}

Iet iet_from_json(const Json& j) {
  return Iet(j.at("lengths").get<std::vector<double>>(), permutation_from_json(j.at("permutation")));
}

Json to_json(const InductionRecord& rec) {
  Json images = Json::array();
  for (const Word& w : rec.substitution.images) images.push_back(word_json(w));
  return Json{{"kind", to_string(rec.kind)},
              {"type", to_string(rec.type)},
              {"count", rec.count},
              {"matrix", to_json(rec.matrix)},
              {"substitution", images},
              {"resulting_perm", to_json(rec.resulting_perm)}};
}

Json to_json(const std::vector<InductionRecord>& recs) {
  Json arr = Json::array();
  for (const auto& r : recs) arr.push_back(to_json(r));
  return Json{{"format_version", kFormatVersion}, {"records", arr}};
}

Json to_json(const RauzyGraph& g) {
  Json nodes = Json::array();
  for (const auto& p : g.nodes) nodes.push_back(to_json(p));
  Json edges = Json::array();
  for (const auto& e : g.edges) edges.push_back(Json{{"from", e.from}, {"to", e.to}, {"type", to_string(e.type)}});
  return Json{{"format_version", kFormatVersion}, {"nodes", nodes}, {"edges", edges}};
}

Json to_json(const DeviationReport& rep) {
  return Json{{"m_re", rep.m.real()},
              {"m_im", rep.m.imag()},
              {"m_abs", std::abs(rep.m)},
              {"x0_used", rep.x0},
              {"perturbed", rep.perturbed},
              {"fitted_exponent", rep.fitted_exponent},
              {"ci", rep.ci_halfwidth},
              {"checkpoints", rep.n_checkpoints},
              {"dev_abs", rep.dev_abs},
              {"running_max", rep.running_max}};
}

Json to_json(const EstimatedSpectrum& est) {
  return Json{{"theta_hat", est.theta_hat},
              {"halfwidth", est.halfwidth},
              {"ratio2", est.ratio2},
              {"ratio2_halfwidth", est.ratio2_halfwidth},
              {"ratio3", est.ratio3},
              {"ratio3_halfwidth", est.ratio3_halfwidth},
              {"n_matrices", est.n_matrices},
              {"resamples", est.resamples}};
}

Json to_json(const SelfSimilarSystem& sys) {
  Json steps = Json::array();
  for (RauzyType t : sys.loop.steps) steps.push_back(to_string(t));
  Json spectrum = Json::array();
  for (auto z : sys.spectrum) spectrum.push_back(complex_json(z));
  Json images = Json::array();
  for (const Word& w : sys.loop.sigma.images) images.push_back(word_json(w));
  return Json{{"format_version", kFormatVersion},
              {"base_perm", to_json(sys.loop.base_perm)},
              {"steps", steps},
              {"M", to_json(sys.loop.M)},
              {"substitution", images},
              {"lambda1", sys.lambda1},
              {"lambda2", sys.lambda2},
              {"lambda3_modulus", sys.lambda3_modulus},
              {"spectrum", spectrum},
              {"V", vector_json(sys.V)},
              {"W1", vector_json(sys.W1)},
              {"W2", vector_json(sys.W2)},
              {"V2", vector_json(sys.V2)},
              {"rho", sys.rho},
              {"K", sys.K},
              {"kappa", sys.kappa},
              {"constants",
               Json{{"A", sys.A_const}, {"B", sys.B_const}, {"C", sys.C_const}, {"reach", sys.reach},
                    {"growth_range", sys.growth_range}}},
              {"selfsim_residual", sys.selfsim_residual}};
}

SelfSimilarSystem system_from_json(const Json& j) {
  if (j.value("format_version", 0) != kFormatVersion)
    throw Error(ErrorKind::InvalidArgument, "unsupported system descriptor format_version");
  std::vector<RauzyType> steps;
  for (const auto& s : j.at("steps")) steps.push_back(type_from_string(s.get<std::string>()));
  RauzyLoop loop = loop_matrix(permutation_from_json(j.at("base_perm")), steps);
  if (j.contains("M") && !(matrix_from_json(j.at("M")) == loop.M))
    throw Error(ErrorKind::InvalidArgument, "stored matrix does not match the loop");
  return build_selfsim(loop);
}

Json to_json(const SandwichReport& rep) {
  Json levels = Json::array();
  for (std::size_t i = 0; i < rep.levels.size(); ++i)
    levels.push_back(Json{{"l", rep.levels[i]}, {"n_l", rep.n_l[i]}, {"S", rep.S_at_n_l[i]}});
  return Json{{"aN", rep.aN},
              {"tau", rep.tau},
              {"x0", rep.x0},
              {"nmax", rep.n_max},
              {"m_abs", rep.m_abs},
              {"H", rep.H},
              {"alpha", rep.alpha},
              {"U", vector_json(rep.U)},
              {"D", rep.D},
              {"D_prime", rep.D_prime},
              {"margin", rep.margin},
              {"C1", rep.C1},
              {"C2", rep.C2},
              {"C2_half", rep.C2_half},
              {"l0", rep.l0},
              {"upper_worst_ratio", rep.upper_worst_ratio},
              {"upper_ok", rep.upper_ok},
              {"lower_worst_ratio", rep.lower_worst_ratio},
              {"lower_ok", rep.lower_ok},
              {"lower_ok_half", rep.lower_ok_half},
              {"levels", levels},
              {"fitted_exponent", rep.series.fitted_exponent},
              {"ci", rep.series.ci_halfwidth},
              {"slope_error", rep.slope_error}};
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::InvalidArgument, "cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw Error(ErrorKind::InvalidArgument, "write to '" + path + "' failed");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::InvalidArgument, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_json(const std::string& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

Json read_json(const std::string& path) {
  try {
    return Json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::InvalidArgument, "'" + path + "' is not valid JSON: " + e.what());
  }
}

std::string series_csv(const DeviationReport& rep) {
  std::string out = "n,dev_abs,running_max\n";
  for (std::size_t i = 0; i < rep.n_checkpoints.size(); ++i)
    out += std::to_string(rep.n_checkpoints[i]) + "," + format_double(rep.dev_abs[i]) + "," +
           format_double(rep.running_max[i]) + "\n";
  return out;
}

std::string trajectory_csv(const Trajectory& tr) {
  std::string out = "step,side,px,py,x,tau\n";
  for (const auto& s : tr.states) {
    Point p = s.position();
    out += std::to_string(s.step_index) + "," + std::to_string(s.entered_side) + "," + format_double(p.real()) + "," +
           format_double(p.imag()) + "," + format_double(s.x) + "," + format_double(s.tau) + "\n";
  }
  return out;
}

}  // namespace tbill
