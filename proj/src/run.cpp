#include "orbipart/run.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "orbipart/partition.hpp"
#include "orbipart/system.hpp"

namespace orbipart {

namespace {
constexpr double kPi = std::numbers::pi;
using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

json to_json(const EnergyReport& r, double lambda, int sweeps, bool converged) {
  json j;
  j["lambda"] = lambda;
  j["c_value"] = r.c_value;
  j["total_J"] = r.total_J;
  j["per_component_normsq"] = r.per_component_normsq;
  j["per_component_crit"] = r.per_component_crit;
  std::vector<std::vector<double>> ov;
  for (int i = 0; i < r.overlaps.rows(); ++i) {
    std::vector<double> row;
    for (int k = 0; k < r.overlaps.cols(); ++k) row.push_back(r.overlaps(i, k));
    ov.push_back(std::move(row));
  }
  j["overlaps"] = ov;
  j["iterations"] = sweeps;
  j["converged"] = converged;
  return j;
}

json partition_to_json(const IntervalPartition& p, const std::vector<double>& energies,
                       double total) {
  json j;
  j["m"] = p.cfg.m;
  j["n"] = p.cfg.n;
  j["N"] = p.cfg.N;
  j["M"] = p.M;
  j["cuts"] = p.cuts;
  j["interval_energies"] = energies;
  j["total"] = total;
  std::vector<std::vector<double>> radii;
  for (double c : p.cuts) {
    auto [r1, r2] = boundary_radii(c);
    radii.push_back({r1, r2});
  }
  j["boundary_radii"] = radii;
  return j;
}

void write_plotdata(const std::string& path, const OrbitGrid& g,
                    const std::vector<ReducedFunction>& comps,
                    const ReducedFunction* signed_profile) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "t";
  for (size_t i = 0; i < comps.size(); ++i) os << ",w_" << (i + 1);
  os << ",signed\n";
  char buf[64];
  for (int j = 0; j <= g.K; ++j) {
    std::snprintf(buf, sizeof(buf), "%.17g", g.nodes[j]);
    os << buf;
    double alt = 0.0;
    for (size_t i = 0; i < comps.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", comps[i].values[j]);
      os << ',' << buf;
      alt += ((i % 2 == 0) ? 1.0 : -1.0) * comps[i].values[j];
    }
    double sv = signed_profile ? signed_profile->values[j] : alt;
    std::snprintf(buf, sizeof(buf), "%.17g", sv);
    os << ',' << buf << '\n';
  }
}

double tol_of(const RunConfig& c, const std::string& key, double dflt) {
  auto it = c.tolerances.find(key);
  return it == c.tolerances.end() ? dflt : it->second;
}

SolverOptions scalar_options(const RunConfig& c) {
  SolverOptions o;
  o.max_iters = static_cast<int>(tol_of(c, "max_iters", o.max_iters));
  o.tol_energy = tol_of(c, "tol_energy", 1e-9);
  o.tol_res = tol_of(c, "tol_res", 1e-4);
  o.tol_nehari = tol_of(c, "tol_nehari", 1e-6);
  o.seed = c.seed;
  return o;
}
}  // namespace

std::string to_string(RunMode m) {
  switch (m) {
    case RunMode::Scalar: return "scalar";
    case RunMode::System: return "system";
    case RunMode::Partition: return "partition";
    case RunMode::VerifyAll: return "verify-all";
  }
  return "?";
}

RunMode run_mode_from_string(const std::string& s) {
  if (s == "scalar") return RunMode::Scalar;
  if (s == "system") return RunMode::System;
  if (s == "partition") return RunMode::Partition;
  if (s == "verify-all") return RunMode::VerifyAll;
  throw std::invalid_argument("mode: expected scalar|system|partition|verify-all, got '" + s + "'");
}

RunConfig parse_config(const std::vector<std::string>& args) {
  RunConfig cfg;
  // first pass: config file
  for (size_t i = 0; i + 1 < args.size(); ++i) {
    if (args[i] == "--config") {
      std::ifstream is(args[i + 1]);
      if (!is) throw std::invalid_argument("config: cannot open file " + args[i + 1]);
      json j = json::parse(is);
      if (j.contains("m")) cfg.m = j["m"];
      if (j.contains("n")) cfg.n = j["n"];
      if (j.contains("M")) cfg.M = j["M"];
      if (j.contains("mode")) cfg.mode = run_mode_from_string(j["mode"]);
      if (j.contains("K")) cfg.K = j["K"];
      if (j.contains("grading")) cfg.grading = j["grading"];
      if (j.contains("lambda_schedule"))
        cfg.lambda_schedule = j["lambda_schedule"].get<std::vector<double>>();
      if (j.contains("a")) cfg.scalar_a = j["a"];
      if (j.contains("b")) cfg.scalar_b = j["b"];
      if (j.contains("out")) cfg.output_dir = j["out"];
      if (j.contains("seed")) cfg.seed = j["seed"];
      if (j.contains("tolerances")) {
        for (auto& [k, v] : j["tolerances"].items()) cfg.tolerances[k] = v;
      }
    }
  }
  auto parse_schedule = [](const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (!tok.empty()) out.push_back(std::stod(tok));
    }
    return out;
  };
  for (size_t i = 0; i < args.size(); ++i) {
    auto need = [&](const char* flag) -> const std::string& {
      if (i + 1 >= args.size())
        throw std::invalid_argument(std::string(flag) + ": missing value");
      return args[++i];
    };
    const std::string& a = args[i];
    if (a == "--m") cfg.m = std::stoi(need("--m"));
    else if (a == "--n") cfg.n = std::stoi(need("--n"));
    else if (a == "--M") cfg.M = std::stoi(need("--M"));
    else if (a == "--mode") cfg.mode = run_mode_from_string(need("--mode"));
    else if (a == "--K") cfg.K = std::stoi(need("--K"));
    else if (a == "--grading") cfg.grading = std::stod(need("--grading"));
    else if (a == "--lambda") cfg.lambda_schedule = parse_schedule(need("--lambda"));
    else if (a == "--a") cfg.scalar_a = std::stod(need("--a"));
    else if (a == "--b") cfg.scalar_b = std::stod(need("--b"));
    else if (a == "--out") cfg.output_dir = need("--out");
    else if (a == "--seed") cfg.seed = static_cast<unsigned>(std::stoul(need("--seed")));
    else if (a == "--config") { need("--config"); }
    else throw std::invalid_argument("unknown flag '" + a + "'");
  }
  if (const char* env = std::getenv("PARTITION_OUT")) {
    cfg.output_dir = env;
  }

  std::vector<std::string> violations;
  if (cfg.m < 2) violations.push_back("m >= 2 required");
  if (cfg.n < 2) violations.push_back("n >= 2 required");
  if (cfg.m + cfg.n - 1 < 3) violations.push_back("m+n-1 >= 3 required");
  if (cfg.mode != RunMode::Scalar && cfg.M < 2)
    violations.push_back("M >= 2 required for system/partition modes");
  if (cfg.K < 32) violations.push_back("K >= 32 required");
  if (cfg.grading != 0.0 && cfg.grading < 1.0)
    violations.push_back("grading >= 1 required");
  for (size_t i = 0; i + 1 < cfg.lambda_schedule.size(); ++i) {
    if (!(cfg.lambda_schedule[i + 1] < cfg.lambda_schedule[i])) {
      violations.push_back("lambda_schedule must be strictly decreasing");
      break;
    }
  }
  for (double l : cfg.lambda_schedule) {
    if (!(l < 0.0)) {
      violations.push_back("lambda_schedule entries must be negative");
      break;
    }
  }
  if (!violations.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& v : violations) msg += "\n  - " + v;
    throw std::invalid_argument(msg);
  }
  return cfg;
}

RunReport run(const RunConfig& config) {
  auto t_start = std::chrono::steady_clock::now();
  fs::create_directories(config.output_dir);

  SymmetryConfig cfg = make_symmetry_config(config.m, config.n);
  double grading = (config.grading == 0.0) ? default_grading(cfg) : config.grading;
  OrbitGrid grid = build_grid(cfg, config.K, grading);
  SolverOptions sopts = scalar_options(config);

  json rep;
  rep["schema_version"] = 1;
  {
    json jc;
    jc["m"] = config.m;
    jc["n"] = config.n;
    jc["N"] = cfg.N;
    jc["M"] = config.M;
    jc["mode"] = to_string(config.mode);
    jc["K"] = config.K;
    jc["grading"] = grading;
    jc["lambda_schedule"] = config.lambda_schedule;
    jc["out"] = config.output_dir;
    jc["seed"] = config.seed;
    json jt = json::object();
    for (auto& [k, v] : config.tolerances) jt[k] = v;
    jc["tolerances"] = jt;
    rep["config"] = jc;
  }
  {
    double target = 4.0 * sphere_area(cfg.N + 1);
    double got = (grid.quad_weights * grid.h_values).sum();
    json jg;
    jg["K"] = grid.K;
    jg["grading"] = grading;
    jg["weight_integral"] = got;
    jg["weight_integral_rel_err"] = (got - target) / target;
    rep["grid"] = jg;
  }

  bool all_pass = true;
  std::vector<std::string> failures;
  const bool want_scalar =
      config.mode == RunMode::Scalar || config.mode == RunMode::VerifyAll;
  const bool want_system =
      config.mode == RunMode::System || config.mode == RunMode::VerifyAll;
  const bool want_partition =
      config.mode == RunMode::Partition || config.mode == RunMode::VerifyAll;

  if (want_scalar) {
    double a = config.scalar_a;
    double b = (config.scalar_b == 0.0) ? kPi : config.scalar_b;
    ScalarSolution sol = least_energy_on_interval(grid, a, b, sopts);
    json js;
    js["a"] = sol.a;
    js["b"] = sol.b;
    js["energy"] = sol.energy;
    js["normsq"] = sol.normsq;
    js["crit"] = sol.crit;
    js["nehari_gap_rel"] = sol.nehari_gap;
    js["residual_sup"] = sol.residual_sup;
    js["iterations"] = sol.iterations;
    js["polished"] = sol.polished;
    rep["scalar"] = js;
    write_csv(sol.profile, (fs::path(config.output_dir) / "scalar_profile.csv").string());
    if (config.mode == RunMode::Scalar) {
      write_plotdata((fs::path(config.output_dir) / "plotdata.csv").string(), grid,
                     {sol.profile}, nullptr);
    }
  }

  IntervalSolutionCache cache(grid, sopts);
  std::optional<OptimizedPartition> opt;
  if (want_partition) {
    PartitionOptions popts;
    popts.solver = sopts;
    opt = optimize_partition(cache, config.M, popts);
    std::vector<double> energies;
    for (int i = 0; i < opt->partition.M; ++i) {
      energies.push_back(
          cache.solve(opt->partition.lower(i), opt->partition.upper(i)).energy);
    }
    rep["partition"] = partition_to_json(opt->partition, energies, opt->energy);

    NodalSolution nodal = assemble_nodal(opt->partition, cache);
    json jn;
    jn["energy"] = nodal.total_energy;
    jn["sign_changes"] = nodal.sign_changes;
    jn["residual_sup"] = nodal.residual_sup_interior;
    rep["nodal"] = jn;
    std::vector<ReducedFunction> profiles;
    for (size_t i = 0; i < nodal.pieces.size(); ++i) {
      profiles.push_back(nodal.pieces[i].profile);
      write_csv(nodal.pieces[i].profile,
                (fs::path(config.output_dir) / ("w_" + std::to_string(i + 1) + ".csv"))
                    .string());
    }
    write_plotdata((fs::path(config.output_dir) / "plotdata.csv").string(), grid,
                   profiles, &nodal.signed_profile);
  }

  std::optional<ContinuationResult> cont;
  if (want_system) {
    SystemOptions syso;
    syso.scalar = sopts;
    syso.tol_energy = tol_of(config, "tol_energy_system", 1e-10);
    cont = lambda_continuation(grid, config.lambda_schedule, config.M, syso);
    json stages = json::array();
    for (const auto& st : cont->stages) {
      stages.push_back(to_json(st.report, st.lambda, st.sweeps, st.converged));
    }
    rep["stages"] = stages;
    if (!cont->completed) {
      all_pass = false;
      failures.push_back("continuation failed at stage " +
                         std::to_string(cont->failed_stage));
      rep["continuation_failed_stage"] = cont->failed_stage;
    } else {
      const StageResult& last = cont->stages.back();
      json js;
      js["final_lambda"] = last.lambda;
      js["final_c"] = last.report.c_value;
      double mx = 0.0;
      for (int i = 0; i < last.report.overlaps.rows(); ++i)
        for (int k = 0; k < last.report.overlaps.cols(); ++k)
          mx = std::max(mx, last.report.overlaps(i, k));
      js["final_max_overlap"] = mx;
      // empirical per-stage decay of the overlaps and of the gap to the
      // disjoint-support benchmark (when available)
      std::vector<double> ov_factors;
      for (size_t k = 1; k < cont->stages.size(); ++k) {
        double a = cont->stages[k - 1].report.overlaps.maxCoeff();
        double b = cont->stages[k].report.overlaps.maxCoeff();
        ov_factors.push_back(a > 0 ? b / a : 0.0);
      }
      js["overlap_stage_factors"] = ov_factors;
      try {
        IntervalPartition ext = extract_supports(last.state, 0.01);
        js["extracted_cuts"] = ext.cuts;
      } catch (const SegregationIncomplete& e) {
        js["extracted_cuts_error"] = e.what();
      }
      if (opt) {
        js["partition_value"] = opt->energy;
        js["segregation_gap_rel"] = (opt->energy - last.report.c_value) / opt->energy;
        std::vector<double> gap_factors;
        for (size_t k = 1; k < cont->stages.size(); ++k) {
          double a = opt->energy - cont->stages[k - 1].report.c_value;
          double b = opt->energy - cont->stages[k].report.c_value;
          gap_factors.push_back(a > 0 ? b / a : 0.0);
        }
        js["gap_stage_factors"] = gap_factors;
      }
      rep["system_summary"] = js;
      if (config.mode == RunMode::System) {
        std::vector<ReducedFunction> profiles;
        for (size_t i = 0; i < last.state.components.size(); ++i) {
          profiles.push_back(last.state.components[i]);
          write_csv(last.state.components[i],
                    (fs::path(config.output_dir) / ("w_" + std::to_string(i + 1) + ".csv"))
                        .string());
        }
        write_plotdata((fs::path(config.output_dir) / "plotdata.csv").string(), grid,
                       profiles, nullptr);
      }
    }
  }

  if (config.mode == RunMode::VerifyAll) {
    json ver;
    // subadditivity on seeded random triples
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> unif(0.08, kPi - 0.08);
    json subs = json::array();
    bool sub_pass = true;
    const double min_width = 12.0 * kPi / grid.K;
    for (int q = 0; q < 5; ++q) {
      double a, b, c;
      do {
        a = unif(rng);
        b = unif(rng);
        c = unif(rng);
        if (a > b) std::swap(a, b);
        if (b > c) std::swap(b, c);
        if (a > b) std::swap(a, b);
      } while (b - a < min_width || c - b < min_width);
      SubadditivityReport r = verify_subadditivity(cache, a, b, c);
      json jr;
      jr["a"] = a;
      jr["b"] = b;
      jr["c"] = c;
      jr["lhs"] = r.lhs;
      jr["rhs"] = r.rhs;
      jr["margin"] = r.margin;
      jr["pass"] = r.pass;
      subs.push_back(jr);
      sub_pass = sub_pass && r.pass;
    }
    ver["subadditivity"] = subs;
    if (!sub_pass) failures.push_back("subadditivity");

    bool cmp_pass = true;
    if (cont && cont->completed && opt) {
      json jc;
      std::vector<double> cs;
      for (const auto& st : cont->stages) cs.push_back(st.report.c_value);
      jc["stage_c"] = cs;
      jc["partition_value"] = opt->energy;
      for (double cv : cs) {
        cmp_pass = cmp_pass && verify_comparison(cv, opt->energy, 1e-6 * opt->energy);
      }
      jc["pass"] = cmp_pass;
      ver["comparison"] = jc;
      if (!cmp_pass) failures.push_back("comparison");
    }

    PartitionOptions popts;
    popts.solver = sopts;
    MonotonicityReport mono = verify_monotone_in_M(cache, std::max(3, config.M), popts);
    json jm;
    jm["energies"] = mono.energies;
    jm["strictly_increasing"] = mono.strictly_increasing;
    jm["min_margin"] = mono.min_margin;
    ver["monotonicity"] = jm;
    if (!mono.strictly_increasing) failures.push_back("monotonicity");

    all_pass = all_pass && sub_pass && cmp_pass && mono.strictly_increasing;
    ver["all_pass"] = all_pass;
    ver["failures"] = failures;
    rep["verification"] = ver;
  }

  auto t_end = std::chrono::steady_clock::now();
  json jt;
  jt["seconds"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(t_end - t_start).count() /
      1000.0;
  rep["timing"] = jt;

  RunReport out;
  out.all_verifications_pass = all_pass;
  out.report_json = rep.dump(2);
  std::ofstream os(fs::path(config.output_dir) / "report.json");
  if (!os) throw std::runtime_error("cannot write report.json");
  os << out.report_json << '\n';
  return out;
}

}  // namespace orbipart
