// informa: data informativity analysis and controller synthesis from
// input-output or input-state data with cross-covariance noise bounds.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "informa/informa.hpp"

namespace {

using namespace informa;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNotInformative = 2;
constexpr int kExitNumerical = 3;

InstrumentSpec parse_instrument(const std::string& spec) {
  if (spec == "identity") return InstrumentSpec::identity();
  if (spec.rfind("lags:", 0) == 0) {
    std::vector<int> lags;
    const std::string body = spec.substr(5);
    size_t pos = 0;
    while (pos < body.size()) {
      size_t comma = body.find(',', pos);
      const std::string tok = body.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      const size_t dash = tok.find('-');
      if (dash != std::string::npos && dash > 0) {
        const int lo = std::stoi(tok.substr(0, dash));
        const int hi = std::stoi(tok.substr(dash + 1));
        for (int k = lo; k <= hi; ++k) lags.push_back(k);
      } else if (!tok.empty()) {
        lags.push_back(std::stoi(tok));
      }
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (lags.empty()) throw InvalidArgument("instrument spec has no lags: " + spec);
    return InstrumentSpec::lagged_input(lags);
  }
  if (spec.rfind("csv:", 0) == 0) return InstrumentSpec::custom_matrix(load_matrix_csv(spec.substr(4)));
  throw InvalidArgument("unknown instrument spec: " + spec + " (expected identity | lags:... | csv:PATH)");
}

Matrix parse_hu(const std::string& hu, int p) {
  try {
    size_t used = 0;
    const double v = std::stod(hu, &used);
    if (used == hu.size()) return v * Matrix::Identity(p, p);
  } catch (const std::exception&) {
  }
  Matrix M = load_matrix_csv(hu);
  require(M.rows() == p && M.cols() == p, "--hu matrix must be p x p for noise dimension p");
  return M;
}

struct DataOptions {
  std::string data_path;
  bool state = false;
  bool io = false;
  int lag = 0;
  std::string instrument = "identity";
  std::string hu;
  std::string cz_path, dz_path;
};

void add_data_options(CLI::App* cmd, DataOptions& opt, bool need_hu = true) {
  cmd->add_option("--data", opt.data_path, "trajectory CSV")->required();
  cmd->add_flag("--state", opt.state, "input-state data");
  cmd->add_flag("--io", opt.io, "input-output data");
  cmd->add_option("--lag", opt.lag, "ARX lag order (required with --io)");
  cmd->add_option("--instrument", opt.instrument, "identity | lags:0,1,..,9 (or lags:0-9) | csv:PATH");
  auto* hu = cmd->add_option("--hu", opt.hu, "cross-covariance bound: scalar or p x p CSV");
  if (need_hu) hu->required();
  cmd->add_option("--cz", opt.cz_path, "performance output matrix CSV (pz x n)");
  cmd->add_option("--dz", opt.dz_path, "performance feedthrough CSV (pz x m)");
}

struct BuiltSetup {
  FeasibleSetForm form;
  LiftingStructure structure;
  Matrix Cz, Dz;
  std::vector<Matrix> slater_candidates;
  ProblemDescription description;
  Trajectory traj;
  // kept for audits and bound checks
  std::optional<IoDataMatrices> io_data;
  std::optional<StateDataMatrices> state_data;
  Instrument instrument;
  NoiseBound bound;
};

BuiltSetup build_setup(const DataOptions& opt, SynthesisObjective objective) {
  if (opt.state == opt.io)
    throw InvalidArgument("exactly one of --state / --io must be given");
  BuiltSetup out;
  out.traj = load_trajectory(opt.data_path);
  const InstrumentSpec ispec = parse_instrument(opt.instrument);

  if (opt.io) {
    require(opt.lag >= 1, "--io requires --lag >= 1");
    require(out.traj.kind == TrajectoryKind::InputOutput, "--io requires an input-output trajectory");
    const IoDataMatrices d = build_io_matrices(out.traj, opt.lag);
    out.structure = lift_structure(opt.lag, d.p(), d.m());
    out.instrument = build_instrument(out.traj, ispec, d.N());
    out.bound = make_cross_cov_bound(parse_hu(opt.hu, d.p()), d.N(), out.instrument.M());
    out.form = build_feasible_form_io(d, out.instrument, out.bound, out.structure);
    out.slater_candidates = {least_squares_candidate_io(d, out.structure),
                             Matrix::Zero(d.n() + d.m(), d.n())};
    // default performance output z(t) = y(t-1)
    out.Cz = Matrix::Zero(d.p(), d.n());
    out.Cz.leftCols(d.p()) = Matrix::Identity(d.p(), d.p());
    out.Dz = Matrix::Zero(d.p(), d.m());
    out.io_data = d;
  } else {
    require(out.traj.kind == TrajectoryKind::InputState, "--state requires an input-state trajectory");
    const StateDataMatrices d = build_state_matrices(out.traj);
    out.structure = LiftingStructure::state(d.n(), d.m());
    out.instrument = build_instrument(out.traj, ispec, d.N());
    out.bound = make_cross_cov_bound(parse_hu(opt.hu, d.n()), d.N(), out.instrument.M());
    out.form = build_feasible_form_state(d, out.instrument, out.bound);
    out.slater_candidates = {least_squares_candidate_state(d), Matrix::Zero(d.n() + d.m(), d.n())};
    out.Cz = Matrix();
    out.Dz = Matrix();
    out.state_data = d;
  }
  if (!opt.cz_path.empty()) {
    out.Cz = load_matrix_csv(opt.cz_path);
    out.Dz = Matrix::Zero(out.Cz.rows(), out.form.m);
  }
  if (!opt.dz_path.empty()) out.Dz = load_matrix_csv(opt.dz_path);
  if (objective != SynthesisObjective::Stabilization)
    require(out.Cz.rows() > 0, "performance synthesis needs a performance output (--cz, or --io default)");

  out.description.mode = opt.io ? "io" : "state";
  out.description.lag = opt.lag;
  out.description.instrument = opt.instrument;
  out.description.Hu = parse_hu(opt.hu, out.form.p);
  out.description.objective = objective;
  out.description.Cz = out.Cz;
  out.description.Dz = out.Dz;
  return out;
}

void emit_result(const Json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << std::endl;
  } else {
    save_json_file(j, out_path);
  }
}

int run_synth(const DataOptions& opt, const std::string& objective_str, std::optional<double> gamma,
              int polish, const std::string& out_path) {
  const SynthesisObjective objective = objective_from_string(objective_str);
  BuiltSetup setup = build_setup(opt, objective);
  const SolverContract contract = SolverContract::defaults();

  const SlaterReport slater = slater_diagnostics(setup.form, setup.slater_candidates);

  SdpProblem problem;
  std::optional<GammaBisection> bisection;
  switch (objective) {
    case SynthesisObjective::Stabilization:
      problem = opt.io ? stab_problem_io(setup.form, setup.structure) : stab_problem_state(setup.form);
      break;
    case SynthesisObjective::H2:
      problem = h2_problem(setup.form, setup.structure, setup.Cz, setup.Dz);
      if (gamma) {
        // fixed-level query: feasibility with trace Z <= gamma^2
        SdpBlock cap;
        cap.size = 1;
        cap.entries.push_back({0, 0, 0, *gamma * *gamma});
        int zk = 0;
        for (int j = 0; j < setup.form.p; ++j)
          for (int i = 0; i <= j; ++i, ++zk)
            if (i == j) cap.entries.push_back({problem.var_map.Z.offset + zk + 1, 0, 0, -1.0});
        problem.blocks.push_back(cap);
        problem.objective.reset();
      }
      break;
    case SynthesisObjective::Hinf:
      if (gamma) {
        problem = hinf_problem(setup.form, setup.structure, setup.Cz, setup.Dz, *gamma);
      } else {
        auto builder = [&](double g) {
          return hinf_problem(setup.form, setup.structure, setup.Cz, setup.Dz, g);
        };
        bisection = bisect_gamma(builder, 1e-6, 1e6, 1e-4, contract);
        if (!bisection->found) {
          SynthesisResult res;
          res.feasible = false;
          res.diagnostics.slater = slater;
          res.diagnostics.rank_flag = setup.form.rank_flag;
          res.diagnostics.status = SolveStatus::Infeasible;
          emit_result(synthesis_result_to_json(res, setup.description), out_path);
          return kExitNotInformative;
        }
        problem = hinf_problem(setup.form, setup.structure, setup.Cz, setup.Dz, bisection->gamma_star);
      }
      break;
  }

  SolveOutcome outcome = bisection ? bisection->outcome : solve(problem, contract);
  if (outcome.status == SolveStatus::Feasible && polish && !problem.objective)
    outcome = detail::polish_beta(problem, outcome, contract);

  SynthesisResult res;
  if (outcome.status == SolveStatus::Feasible) {
    res = extract_result(outcome, problem);
    if (objective == SynthesisObjective::H2 && gamma) res.gamma = *gamma;
  } else {
    res.feasible = false;
    res.diagnostics.status = outcome.status;
    res.diagnostics.weak_infeasibility = outcome.weak;
  }
  res.diagnostics.slater = slater;
  res.diagnostics.rank_flag = setup.form.rank_flag;
  emit_result(synthesis_result_to_json(res, setup.description), out_path);

  if (outcome.status == SolveStatus::Feasible) return kExitOk;
  if (outcome.status == SolveStatus::Infeasible) return kExitNotInformative;
  return kExitNumerical;
}

int run_verify(const std::string& result_path, const std::string& data_path, int samples,
               std::uint64_t seed, const std::string& out_path) {
  const Json rj = load_json_file(result_path);
  const SynthesisResult res = synthesis_result_from_json(rj);
  if (!rj.contains("problem"))
    throw InvalidArgument("result file lacks the problem section needed to rebuild the feasible set");
  const ProblemDescription pd = problem_description_from_json(rj.at("problem"));
  if (!res.feasible) throw InvalidArgument("verify: result is not feasible; nothing to audit");

  DataOptions opt;
  opt.data_path = data_path;
  opt.io = pd.mode == "io";
  opt.state = !opt.io;
  opt.lag = pd.lag;
  opt.instrument = pd.instrument;
  BuiltSetup setup;
  {
    // Hu comes from the stored description, not the command line.
    setup.traj = load_trajectory(data_path);
    const InstrumentSpec ispec = parse_instrument(pd.instrument);
    if (opt.io) {
      const IoDataMatrices d = build_io_matrices(setup.traj, pd.lag);
      setup.structure = lift_structure(pd.lag, d.p(), d.m());
      setup.instrument = build_instrument(setup.traj, ispec, d.N());
      setup.bound = make_cross_cov_bound(pd.Hu, d.N(), setup.instrument.M());
      setup.form = build_feasible_form_io(d, setup.instrument, setup.bound, setup.structure);
      setup.slater_candidates = {least_squares_candidate_io(d, setup.structure)};
    } else {
      const StateDataMatrices d = build_state_matrices(setup.traj);
      setup.structure = LiftingStructure::state(d.n(), d.m());
      setup.instrument = build_instrument(setup.traj, ispec, d.N());
      setup.bound = make_cross_cov_bound(pd.Hu, d.N(), setup.instrument.M());
      setup.form = build_feasible_form_state(d, setup.instrument, setup.bound);
      setup.slater_candidates = {least_squares_candidate_state(d)};
    }
  }

  // Base member for sampling: the regression estimate, embedded structurally.
  const Matrix Zc = setup.slater_candidates[0];
  std::pair<Matrix, Matrix> base{Zc.topRows(setup.form.n).transpose(),
                                 Zc.bottomRows(setup.form.m).transpose()};
  const AuditReport rep = audit(res, setup.form, setup.structure, pd.Cz, pd.Dz, pd.objective, base,
                                samples, seed);
  emit_result(audit_report_to_json(rep), out_path);
  return rep.clean() ? kExitOk : kExitNotInformative;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"data informativity for stabilization and H-infinity / H2 control"};
  app.require_subcommand(1);

  // lift
  auto* lift_cmd = app.add_subcommand("lift", "lift an ARX (or state-space) model file");
  std::string lift_model, lift_out;
  lift_cmd->add_option("--model", lift_model, "model JSON")->required();
  lift_cmd->add_option("--out", lift_out, "output JSON (stdout when omitted)");

  // bound-check
  auto* bc_cmd = app.add_subcommand("bound-check", "check a noise record against a bound");
  DataOptions bc_opt;
  std::string bc_noise;
  add_data_options(bc_cmd, bc_opt);
  bc_cmd->add_option("--noise", bc_noise, "noise CSV (p x N)")->required();

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "decide informativity and synthesize a gain");
  std::string synth_obj;
  synth_cmd->add_option("objective", synth_obj, "stab | hinf | h2")->required();
  DataOptions synth_opt;
  add_data_options(synth_cmd, synth_opt);
  double synth_gamma = 0.0;
  auto* gopt = synth_cmd->add_option("--gamma", synth_gamma, "fixed performance level");
  int synth_polish = 1;
  synth_cmd->add_option("--polish", synth_polish, "re-solve maximizing beta (default 1)");
  std::string synth_out;
  synth_cmd->add_option("--out", synth_out, "result JSON path (stdout when omitted)");

  // verify
  auto* verify_cmd = app.add_subcommand("verify", "audit a synthesis result against sampled members");
  std::string verify_result, verify_data, verify_out;
  int verify_samples = 50;
  std::uint64_t verify_seed = 0;
  verify_cmd->add_option("--result", verify_result, "result JSON from synth")->required();
  verify_cmd->add_option("--data", verify_data, "trajectory CSV")->required();
  verify_cmd->add_option("--samples", verify_samples, "member samples (default 50)");
  verify_cmd->add_option("--seed", verify_seed, "sampling seed");
  verify_cmd->add_option("--out", verify_out, "report JSON path (stdout when omitted)");

  // experiment
  auto* exp_cmd = app.add_subcommand("experiment", "run a Monte-Carlo informativity sweep");
  std::string exp_config, exp_outdir;
  exp_cmd->add_option("--config", exp_config, "experiment config JSON")->required();
  exp_cmd->add_option("--outdir", exp_outdir, "output directory")->required();

  // export-sdpa
  auto* exp_sdpa = app.add_subcommand("export-sdpa", "write the assembled problem in sparse block form");
  std::string sdpa_problem, sdpa_out;
  exp_sdpa->add_option("--problem", sdpa_problem, "stab | hinf | h2")->required();
  DataOptions sdpa_opt;
  add_data_options(exp_sdpa, sdpa_opt);
  double sdpa_gamma = 0.0;
  auto* sdpa_gopt = exp_sdpa->add_option("--gamma", sdpa_gamma, "performance level (hinf)");
  exp_sdpa->add_option("--out", sdpa_out, "output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (lift_cmd->parsed()) {
      const ArxModel model = arx_model_from_json(load_json_file(lift_model));
      const StateSpaceModel ss = lift_arx(model);
      const LiftingStructure s = lift_structure(model.lag, model.p, model.m);
      Json j;
      j["model"] = arx_model_to_json(model);
      j["n"] = ss.n();
      j["Az"] = matrix_to_json(ss.Az);
      j["Bz"] = matrix_to_json(ss.Bz);
      j["Hz"] = matrix_to_json(ss.Hz);
      j["Cz"] = matrix_to_json(ss.Cz);
      j["Dz"] = matrix_to_json(ss.Dz);
      j["J1"] = matrix_to_json(s.J1);
      j["J2"] = matrix_to_json(s.J2);
      emit_result(j, lift_out);
      return kExitOk;
    }

    if (bc_cmd->parsed()) {
      BuiltSetup setup = build_setup(bc_opt, SynthesisObjective::Stabilization);
      const Matrix E = load_matrix_csv(bc_noise);
      const bool ok = check_noise_bound(E, setup.instrument, setup.bound);
      Json j;
      j["admissible"] = ok;
      j["min_eigenvalue"] = min_eigenvalue_sym(noise_bound_form(E, setup.instrument, setup.bound));
      std::cout << j.dump(2) << std::endl;
      return ok ? kExitOk : kExitNotInformative;
    }

    if (synth_cmd->parsed()) {
      std::optional<double> gamma;
      if (gopt->count()) gamma = synth_gamma;
      return run_synth(synth_opt, synth_obj, gamma, synth_polish, synth_out);
    }

    if (verify_cmd->parsed()) {
      return run_verify(verify_result, verify_data, verify_samples, verify_seed, verify_out);
    }

    if (exp_cmd->parsed()) {
      const Json cj = load_json_file(exp_config);
      const ExperimentConfig cfg = experiment_config_from_json(cj);
      const std::string mode = cj.value("mode", "state");
      const SweepResult result = mode == "io" ? run_io_sweep(cfg) : run_state_sweep(cfg);
      emit_plot_data(result, exp_outdir);
      save_json_file(cj, exp_outdir + "/config.json");
      int informative = 0;
      for (const auto& c : result.cells) informative += c.informative ? 1 : 0;
      std::cout << "cells: " << result.cells.size() << ", informative: " << informative << "\n";
      return kExitOk;
    }

    if (exp_sdpa->parsed()) {
      const SynthesisObjective objective = objective_from_string(sdpa_problem);
      BuiltSetup setup = build_setup(sdpa_opt, objective);
      SdpProblem problem;
      switch (objective) {
        case SynthesisObjective::Stabilization:
          problem = sdpa_opt.io ? stab_problem_io(setup.form, setup.structure)
                                : stab_problem_state(setup.form);
          break;
        case SynthesisObjective::H2:
          problem = h2_problem(setup.form, setup.structure, setup.Cz, setup.Dz);
          break;
        case SynthesisObjective::Hinf: {
          const double g = sdpa_gopt->count() ? sdpa_gamma : 1.0;
          problem = hinf_problem(setup.form, setup.structure, setup.Cz, setup.Dz, g);
          break;
        }
      }
      export_standard_form(problem, sdpa_out);
      return kExitOk;
    }
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitUsage;
}
