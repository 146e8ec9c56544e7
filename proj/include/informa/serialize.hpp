#pragma once

#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "informa/core.hpp"
#include "informa/experiments.hpp"
#include "informa/feasible_set.hpp"
#include "informa/lifting.hpp"
#include "informa/synthesis.hpp"
#include "informa/verification.hpp"

namespace informa {

using Json = nlohmann::json;

/// Matrices travel as {"rows": r, "cols": c, "data": [row-major values]}.
inline Json matrix_to_json(const Matrix& M) {
  Json j;
  j["rows"] = M.rows();
  j["cols"] = M.cols();
  std::vector<double> data;
  data.reserve(M.size());
  for (int r = 0; r < M.rows(); ++r)
    for (int c = 0; c < M.cols(); ++c) data.push_back(M(r, c));
  j["data"] = data;
  return j;
}

inline Matrix matrix_from_json(const Json& j) {
  if (j.is_array()) {  // nested-array shorthand [[...], [...]]
    const int rows = static_cast<int>(j.size());
    if (rows == 0) return Matrix(0, 0);
    const int cols = static_cast<int>(j[0].size());
    Matrix M(rows, cols);
    for (int r = 0; r < rows; ++r) {
      if (static_cast<int>(j[r].size()) != cols) throw ParseError("matrix json: ragged rows");
      for (int c = 0; c < cols; ++c) M(r, c) = j[r][c].get<double>();
    }
    return M;
  }
  const int rows = j.at("rows").get<int>();
  const int cols = j.at("cols").get<int>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<int>(data.size()) != rows * cols) throw ParseError("matrix json: data length mismatch");
  Matrix M(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) M(r, c) = data[static_cast<size_t>(r) * cols + c];
  return M;
}

inline const char* to_string(SynthesisObjective o) {
  switch (o) {
    case SynthesisObjective::Stabilization: return "stab";
    case SynthesisObjective::Hinf: return "hinf";
    case SynthesisObjective::H2: return "h2";
  }
  return "unknown";
}

inline SynthesisObjective objective_from_string(const std::string& s) {
  if (s == "stab") return SynthesisObjective::Stabilization;
  if (s == "hinf") return SynthesisObjective::Hinf;
  if (s == "h2") return SynthesisObjective::H2;
  throw ParseError("unknown objective: " + s);
}

/// Model files: either an ARX description {l, p, m, A_coeffs, B_coeffs}
/// or a state-space triple {A0, B0, C0} to be realized as ARX.
inline ArxModel arx_model_from_json(const Json& j) {
  if (j.contains("A0")) {
    return arx_from_state_space(matrix_from_json(j.at("A0")), matrix_from_json(j.at("B0")),
                                matrix_from_json(j.at("C0")));
  }
  ArxModel model;
  model.lag = j.at("l").get<int>();
  model.p = j.at("p").get<int>();
  model.m = j.at("m").get<int>();
  for (const auto& a : j.at("A_coeffs")) model.A_coeffs.push_back(matrix_from_json(a));
  for (const auto& b : j.at("B_coeffs")) model.B_coeffs.push_back(matrix_from_json(b));
  model.validate();
  return model;
}

inline Json arx_model_to_json(const ArxModel& model) {
  Json j;
  j["l"] = model.lag;
  j["p"] = model.p;
  j["m"] = model.m;
  j["A_coeffs"] = Json::array();
  for (const auto& a : model.A_coeffs) j["A_coeffs"].push_back(matrix_to_json(a));
  j["B_coeffs"] = Json::array();
  for (const auto& b : model.B_coeffs) j["B_coeffs"].push_back(matrix_to_json(b));
  return j;
}

inline Json slater_to_json(const SlaterReport& rep) {
  Json j;
  j["holds"] = rep.holds;
  j["positive_inertia"] = rep.positive_inertia;
  j["best_min_eig"] = rep.best_min_eig;
  if (rep.witness) j["witness"] = matrix_to_json(*rep.witness);
  return j;
}

/// Everything needed to rebuild the feasible set and audit the result later.
struct ProblemDescription {
  std::string mode;  // "state" | "io"
  int lag = 0;
  std::string instrument;  // "identity" | "lags:..." | "csv:PATH"
  Matrix Hu;
  SynthesisObjective objective = SynthesisObjective::Stabilization;
  Matrix Cz, Dz;
};

inline Json problem_description_to_json(const ProblemDescription& pd) {
  Json j;
  j["mode"] = pd.mode;
  j["lag"] = pd.lag;
  j["instrument"] = pd.instrument;
  j["hu"] = matrix_to_json(pd.Hu);
  j["objective"] = to_string(pd.objective);
  j["cz"] = matrix_to_json(pd.Cz);
  j["dz"] = matrix_to_json(pd.Dz);
  return j;
}

inline ProblemDescription problem_description_from_json(const Json& j) {
  ProblemDescription pd;
  pd.mode = j.at("mode").get<std::string>();
  pd.lag = j.at("lag").get<int>();
  pd.instrument = j.at("instrument").get<std::string>();
  pd.Hu = matrix_from_json(j.at("hu"));
  pd.objective = objective_from_string(j.at("objective").get<std::string>());
  pd.Cz = matrix_from_json(j.at("cz"));
  pd.Dz = matrix_from_json(j.at("dz"));
  return pd;
}

inline Json synthesis_result_to_json(const SynthesisResult& res,
                                     const std::optional<ProblemDescription>& pd = std::nullopt) {
  Json j;
  j["feasible"] = res.feasible;
  if (res.feasible) {
    j["K"] = matrix_to_json(res.K);
    j["P"] = matrix_to_json(res.P);
    j["alpha"] = res.alpha;
    j["beta"] = res.beta;
  }
  if (res.gamma) j["gamma"] = *res.gamma;
  Json d;
  d["status"] = to_string(res.diagnostics.status);
  d["weak_infeasibility"] = res.diagnostics.weak_infeasibility;
  d["rank_flag"] = res.diagnostics.rank_flag;
  d["lambda_scale"] = res.diagnostics.lambda_scale;
  d["slater_report"] = slater_to_json(res.diagnostics.slater);
  if (res.diagnostics.residual_eigs.size()) {
    std::vector<double> eigs(res.diagnostics.residual_eigs.data(),
                             res.diagnostics.residual_eigs.data() + res.diagnostics.residual_eigs.size());
    d["residual_eigenvalues"] = eigs;
  }
  j["diagnostics"] = d;
  if (pd) j["problem"] = problem_description_to_json(*pd);
  return j;
}

inline SynthesisResult synthesis_result_from_json(const Json& j) {
  SynthesisResult res;
  res.feasible = j.at("feasible").get<bool>();
  if (res.feasible) {
    res.K = matrix_from_json(j.at("K"));
    res.P = matrix_from_json(j.at("P"));
    res.alpha = j.at("alpha").get<double>();
    res.beta = j.at("beta").get<double>();
  }
  if (j.contains("gamma")) res.gamma = j.at("gamma").get<double>();
  if (j.contains("diagnostics")) {
    const auto& d = j.at("diagnostics");
    res.diagnostics.rank_flag = d.value("rank_flag", false);
    res.diagnostics.weak_infeasibility = d.value("weak_infeasibility", false);
    res.diagnostics.lambda_scale = d.value("lambda_scale", 1.0);
    if (d.contains("slater_report")) {
      const auto& s = d.at("slater_report");
      res.diagnostics.slater.holds = s.value("holds", false);
      res.diagnostics.slater.positive_inertia = s.value("positive_inertia", 0);
      res.diagnostics.slater.best_min_eig = s.value("best_min_eig", 0.0);
      if (s.contains("witness")) res.diagnostics.slater.witness = matrix_from_json(s.at("witness"));
    }
  }
  return res;
}

inline Json audit_report_to_json(const AuditReport& rep) {
  Json j;
  j["samples_tested"] = rep.samples_tested;
  j["max_spectral_radius"] = rep.max_spectral_radius;
  if (rep.max_h2) j["max_h2"] = *rep.max_h2;
  if (rep.max_hinf) j["max_hinf"] = *rep.max_hinf;
  j["bound_type"] = to_string(rep.bound_type);
  j["seed"] = rep.seed;
  j["violations"] = Json::array();
  for (const auto& v : rep.violations) {
    Json vj;
    vj["sample_index"] = v.sample_index;
    vj["rho"] = v.rho;
    if (v.norm) vj["norm"] = *v.norm;
    vj["slack"] = v.slack;
    j["violations"].push_back(vj);
  }
  return j;
}

inline ExperimentConfig experiment_config_from_json(const Json& j) {
  const std::string mode = j.value("mode", "state");
  ExperimentConfig cfg = mode == "io" ? ExperimentConfig::io_defaults() : ExperimentConfig::state_defaults();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("N_grid")) cfg.N_grid = j.at("N_grid").get<std::vector<int>>();
  if (j.contains("reps")) cfg.reps = j.at("reps").get<int>();
  if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
  if (j.contains("input_sigma")) cfg.input.sigma = j.at("input_sigma").get<double>();
  if (j.contains("noise")) {
    const auto& nj = j.at("noise");
    const std::string dist = nj.value("dist", mode == "io" ? "interval" : "ball");
    if (dist == "ball") {
      cfg.noise.dist = NoiseModel::Dist::BallUniform;
      cfg.noise.radius_sq = nj.value("radius_sq", 0.35);
    } else if (dist == "interval") {
      cfg.noise.dist = NoiseModel::Dist::IntervalUniform;
      cfg.noise.halfwidth = nj.value("halfwidth", 0.35);
    } else {
      throw ParseError("unknown noise dist: " + dist);
    }
  }
  if (j.contains("bounds")) {
    cfg.bounds.clear();
    for (const auto& bj : j.at("bounds")) {
      const std::string kind = bj.at("type").get<std::string>();
      Matrix Hu = bj.at("hu").is_number()
                      ? Matrix::Constant(1, 1, bj.at("hu").get<double>())
                      : matrix_from_json(bj.at("hu"));
      if (kind == "norm") {
        cfg.bounds.push_back(BoundModel::norm_bound(Hu));
      } else if (kind == "crosscov") {
        auto b = BoundModel::cross_cov(Hu, bj.at("lags").get<std::vector<int>>());
        cfg.bounds.push_back(b);
      } else {
        throw ParseError("unknown bound type: " + kind);
      }
      if (bj.contains("label")) cfg.bounds.back().label = bj.at("label").get<std::string>();
    }
  }
  if (j.contains("outputs")) {
    cfg.output_matrices.clear();
    for (const auto& oj : j.at("outputs")) cfg.output_matrices.push_back(matrix_from_json(oj));
  }
  if (j.contains("solver") && j.at("solver").contains("eps_abs"))
    cfg.solver.tolerances.eps_abs = j.at("solver").at("eps_abs").get<double>();
  if (j.contains("solver") && j.at("solver").contains("eps_rel"))
    cfg.solver.tolerances.eps_rel = j.at("solver").at("eps_rel").get<double>();
  if (j.contains("solver") && j.at("solver").contains("max_iter"))
    cfg.solver.tolerances.max_iter = j.at("solver").at("max_iter").get<int>();
  return cfg;
}

inline Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open json file: " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ParseError("invalid json in " + path + ": " + e.what());
  }
}

inline void save_json_file(const Json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write json file: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace informa
