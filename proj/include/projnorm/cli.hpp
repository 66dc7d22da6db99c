#pragma once

#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "projnorm/certify.hpp"
#include "projnorm/io.hpp"
#include "projnorm/oracles.hpp"

namespace projnorm::cli {

using io::json;

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int not_detected = 1;
inline constexpr int input_error = 2;
inline constexpr int budget = 3;
}  // namespace exit_code

namespace detail {

inline void emit(const io::RunConfig& cfg, const json& result, std::ostream& out) {
  const json doc = {{"config", io::config_to_json(cfg)}, {"result", result}};
  const auto text = io::dump17(doc) + "\n";
  if (cfg.out.empty()) {
    out << text;
    return;
  }
  std::ofstream f(cfg.out, std::ios::binary);
  if (!f) throw io::InputError("cannot write " + cfg.out);
  f << text;
}

inline EstimateOptions estimate_options(const io::RunConfig& cfg) {
  EstimateOptions eo;
  eo.m = cfg.m;
  eo.covering = io::parse_covering(cfg.covering);
  eo.guarantee = io::parse_guarantee(cfg.guarantee);
  eo.solver = io::solver_config(cfg);
  eo.grid_budget = cfg.budget_grid;
  return eo;
}

inline int run_norm(io::RunConfig cfg, std::ostream& out) {
  if (cfg.guarantee.empty()) cfg.guarantee = "paper";
  const auto eo = estimate_options(cfg);
  eo.solver.validate();
  const auto tf = io::tensor_from_json(io::read_json_file(cfg.input));
  NormEstimate est;
  try {
    est = tf.real ? estimate_pi_norm(*tf.real, eo) : estimate_pi_norm(*tf.complex, eo);
  } catch (const BudgetExceeded& e) {
    emit(cfg,
         {{"status", "UNCERTIFIED"}, {"certified", false}, {"message", e.what()},
          {"required", e.required()}, {"budget", e.budget()}},
         out);
    return exit_code::budget;
  }
  auto result = io::estimate_to_json(est);
  if (!est.solution.message.empty()) result["message"] = est.solution.message;
  emit(cfg, result, out);
  return est.certified ? exit_code::ok : exit_code::budget;
}

inline int run_certify(io::RunConfig cfg, std::ostream& out) {
  if (cfg.guarantee.empty()) cfg.guarantee = "tight";
  CertifyOptions co;
  co.m_schedule = cfg.m_schedule;
  co.covering = io::parse_covering(cfg.covering);
  co.guarantee = io::parse_guarantee(cfg.guarantee);
  co.field = io::parse_field(cfg.field);
  co.solver = io::solver_config(cfg);
  co.grid_budget = cfg.budget_grid;
  co.solver.validate();
  auto sf = io::state_from_json(io::read_json_file(cfg.input));
  const auto v = certify_state(std::move(sf.party_dims), std::move(sf.matrix), co);
  emit(cfg, io::verdict_to_json(v, co.guarantee), out);
  switch (v.kind) {
    case VerdictKind::entangled: return exit_code::ok;
    case VerdictKind::invalid_state: return exit_code::input_error;
    case VerdictKind::not_detected: break;
  }
  return v.budget_exceeded ? exit_code::budget : exit_code::not_detected;
}

inline int run_covering(io::RunConfig cfg, std::ostream& out) {
  if (cfg.guarantee.empty()) cfg.guarantee = "paper";
  if (cfg.dim < 1) throw io::InputError("--dim must be >= 1");
  if (cfg.m.size() != 1) throw io::InputError("covering takes a single --m");
  const auto mode = io::parse_guarantee(cfg.guarantee);
  CoveringCache cache;
  const auto c = cache.get(static_cast<std::size_t>(cfg.dim), cfg.m.front(), io::parse_covering(cfg.covering),
                           cfg.budget_grid);
  auto stats = io::covering_stats(*c, mode);
  // The grid cardinality bound is reported for every construction.
  stats["grid_bound"] = grid_cardinality(c->dim(), c->m());
  emit(cfg, stats, out);
  return exit_code::ok;
}

struct DebugArgs {
  std::size_t restarts = 64;
  std::size_t iterations = 200;
};

inline int run_debug(io::RunConfig cfg, const DebugArgs& dbg, std::ostream& out) {
  const auto tf = io::tensor_from_json(io::read_json_file(cfg.input));
  oracles::OracleReport rep;
  if (cfg.debug_oracle == "nuclear") {
    const double v = tf.real ? oracles::nuclear_norm(*tf.real) : oracles::nuclear_norm(*tf.complex);
    rep = {"nuclear_norm", v, v, {}};
  } else if (cfg.debug_oracle == "injective") {
    rep = tf.real ? oracles::injective_norm_bruteforce(*tf.real, dbg.restarts, dbg.iterations, cfg.seed)
                  : oracles::injective_norm_bruteforce(*tf.complex, dbg.restarts, dbg.iterations, cfg.seed);
  } else if (cfg.debug_oracle == "bracket") {
    if (cfg.m.size() != 1) throw io::InputError("bracket takes a single --m");
    cfg.guarantee = "tight";
    auto eo = estimate_options(cfg);
    try {
      rep = tf.real ? oracles::reference_bracket(*tf.real, cfg.m.front(), eo)
                    : oracles::reference_bracket(*tf.complex, cfg.m.front(), eo);
    } catch (const BudgetExceeded& e) {
      emit(cfg, {{"status", "UNCERTIFIED"}, {"message", e.what()}}, out);
      return exit_code::budget;
    }
  } else {
    throw io::InputError("unknown oracle '" + cfg.debug_oracle + "'");
  }
  json params = json::object();
  for (const auto& [k, v] : rep.parameters) params[k] = v;
  emit(cfg, {{"method", rep.method}, {"lower", rep.lower}, {"upper", rep.upper}, {"parameters", params}}, out);
  return exit_code::ok;
}

}  // namespace detail

/// Parses argv and runs one subcommand. Returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Certified bounds on projective tensor norms and entanglement certificates", "projnorm"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "projnorm 1.0.0");

  io::RunConfig cfg;
  cfg.threads = std::max(1u, std::thread::hardware_concurrency());
  detail::DebugArgs dbg;

  const auto add_solver_flags = [&](CLI::App* sub) {
    sub->add_option("--covering", cfg.covering, "Net construction per factor")
        ->check(CLI::IsMember({"grid", "circle", "auto"}))
        ->capture_default_str();
    sub->add_option("--guarantee", cfg.guarantee, "Embedding guarantee")->check(CLI::IsMember({"paper", "tight"}));
    sub->add_option("--separation", cfg.separation, "Separation oracle")
        ->check(CLI::IsMember({"exact", "heuristic-then-exact"}))
        ->capture_default_str();
    sub->add_option("--budget-rows", cfg.budget_rows, "Maximum rows in the restricted LP")->capture_default_str();
    sub->add_option("--budget-evals", cfg.budget_evals, "Maximum evaluations per exact separation")
        ->capture_default_str();
    sub->add_option("--budget-grid", cfg.budget_grid, "Maximum grid points per covering")->capture_default_str();
    sub->add_option("--threads", cfg.threads, "Worker threads for separation")->check(CLI::PositiveNumber);
    sub->add_option("--seed", cfg.seed, "Seed for randomised heuristics")->capture_default_str();
    sub->add_option("--out", cfg.out, "Write the result JSON here instead of stdout");
  };

  auto* norm = app.add_subcommand("norm", "Certified bracket on the projective norm of a tensor");
  norm->add_option("--input", cfg.input, "Tensor JSON file")->required();
  norm->add_option("--m", cfg.m, "Covering resolution, one value or one per factor")->delimiter(',');
  add_solver_flags(norm);

  auto* certify = app.add_subcommand("certify", "Entanglement test of a density matrix");
  certify->add_option("--input", cfg.input, "State JSON file")->required();
  certify->add_option("--m-schedule", cfg.m_schedule, "Increasing covering resolutions to try")->delimiter(',');
  certify->add_option("--field", cfg.field, "Field to certify over")
      ->check(CLI::IsMember({"auto", "real", "complex"}))
      ->capture_default_str();
  add_solver_flags(certify);

  auto* covering = app.add_subcommand("covering", "Statistics of a sphere covering");
  covering->add_option("--dim", cfg.dim, "Ambient real dimension")->required();
  covering->add_option("--m", cfg.m, "Covering resolution")->delimiter(',');
  std::string construction = "grid";
  covering->add_option("--construction,--covering", construction, "grid, circle or auto")
      ->check(CLI::IsMember({"grid", "circle", "auto"}))
      ->capture_default_str();
  covering->add_option("--guarantee", cfg.guarantee, "Embedding guarantee")->check(CLI::IsMember({"paper", "tight"}));
  covering->add_option("--budget-grid", cfg.budget_grid, "Maximum grid points")->capture_default_str();
  covering->add_option("--out", cfg.out, "Write the result JSON here instead of stdout");

  auto* debug = app.add_subcommand("debug", "Reference oracles");
  debug->require_subcommand(1);
  const auto add_debug = [&](const char* name, const char* help) {
    auto* sub = debug->add_subcommand(name, help);
    sub->add_option("--input", cfg.input, "Tensor JSON file")->required();
    sub->add_option("--out", cfg.out, "Write the result JSON here instead of stdout");
    sub->add_option("--seed", cfg.seed, "Seed for random restarts")->capture_default_str();
    return sub;
  };
  add_debug("nuclear", "Sum of singular values of an order-2 tensor");
  auto* inj = add_debug("injective", "Alternating-maximisation lower bound on the injective norm");
  inj->add_option("--restarts", dbg.restarts)->capture_default_str();
  inj->add_option("--iterations", dbg.iterations)->capture_default_str();
  auto* br = add_debug("bracket", "High-resolution reference bracket (tight mode)");
  br->add_option("--m", cfg.m, "Covering resolution")->required();
  br->add_option("--covering", cfg.covering)->check(CLI::IsMember({"grid", "circle", "auto"}))->capture_default_str();
  br->add_option("--threads", cfg.threads)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_code::ok : exit_code::input_error;
  }

  try {
    if (*norm) {
      cfg.command = "norm";
      return detail::run_norm(cfg, out);
    }
    if (*certify) {
      cfg.command = "certify";
      cfg.m = {};
      return detail::run_certify(cfg, out);
    }
    if (*covering) {
      cfg.command = "covering";
      cfg.covering = construction;
      cfg.threads = 1;
      return detail::run_covering(cfg, out);
    }
    cfg.command = "debug";
    for (const auto* sub : debug->get_subcommands()) cfg.debug_oracle = sub->get_name();
    return detail::run_debug(cfg, dbg, out);
  } catch (const BudgetExceeded& e) {
    err << "budget exceeded: " << e.what() << "\n";
    return exit_code::budget;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::input_error;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::input_error;
  }
}

}  // namespace projnorm::cli
