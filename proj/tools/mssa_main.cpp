// Command-line front end: data synthesis, single-problem decomposition,
// penalty tuning and benchmark execution.
//
// Exit codes: 0 success, 2 validation/config error, 3 numeric error
// (ill-conditioned, divergence), 4 I/O error.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <string>

#include "mssa/errors.hpp"
#include "mssa/experiments.hpp"
#include "mssa/io.hpp"
#include "mssa/linalg.hpp"
#include "mssa/solver.hpp"
#include "mssa/synthgen.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) {
    throw mssa::io_error("cannot open for writing: " + path);
  }
  out << j.dump(2) << '\n';
}

// Pre-scan for --config and merge the file into CLI11 defaults so that
// explicit flags still win. Unknown keys are rejected.
json load_config(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") {
      std::ifstream in(argv[i + 1]);
      if (!in) {
        throw mssa::io_error(std::string("cannot read config: ") +
                             argv[i + 1]);
      }
      return json::parse(in);
    }
  }
  return json::object();
}

void apply_config(const json& cfg, CLI::App* cmd) {
  if (cfg.is_null() || cfg.empty()) return;
  for (const auto& [key, value] : cfg.items()) {
    CLI::Option* opt = cmd->get_option_no_throw("--" + key);
    if (opt == nullptr) {
      throw CLI::ValidationError("config", "unknown config key: " + key);
    }
    opt->default_val(value.is_string() ? value.get<std::string>()
                                       : value.dump());
  }
}

std::string ext_for(const std::string& format) {
  if (format == "csv") return ".csv";
  if (format == "bin") return ".mat";
  throw CLI::ValidationError("--format", "must be bin or csv");
}

mssa::Problem load_problem(const std::string& y_path,
                           const std::string& phi_path,
                           const std::string& p_path, bool tv, double lambda1,
                           double lambda2) {
  mssa::Matrix Y = mssa::read_matrix(y_path);
  mssa::Matrix Phi = mssa::read_matrix(phi_path);
  if (tv) {
    return mssa::make_tv_problem(std::move(Y), std::move(Phi), lambda1,
                                 lambda2);
  }
  if (p_path.empty()) {
    throw CLI::ValidationError("--P", "either --P FILE or --tv is required");
  }
  mssa::Problem prob;
  prob.Y = std::move(Y);
  prob.Phi = std::move(Phi);
  prob.P = mssa::read_matrix(p_path);
  prob.lambda1 = lambda1;
  prob.lambda2 = lambda2;
  return prob;
}

int cmd_synth(const mssa::SynthSpec& spec, const std::string& out_dir,
              const std::string& format) {
  const std::string ext = ext_for(format);
  if (!fs::is_directory(out_dir)) {
    throw mssa::io_error("output directory does not exist: " + out_dir);
  }
  mssa::Dataset ds = mssa::gen_dataset(spec);
  mssa::write_matrix(out_dir + "/Phi" + ext, ds.Phi);
  char name[64];
  for (std::size_t k = 0; k < ds.Y.size(); ++k) {
    std::snprintf(name, sizeof(name), "/X_true_%03zu", k);
    mssa::write_matrix(out_dir + name + ext, ds.X_true[k]);
    std::snprintf(name, sizeof(name), "/Y_%03zu", k);
    mssa::write_matrix(out_dir + name + ext, ds.Y[k]);
  }
  json manifest{{"C", spec.C},
                {"T", spec.T},
                {"N_phi", spec.N_phi},
                {"K", spec.K},
                {"M", spec.M},
                {"d_min", spec.d_min},
                {"d_max", spec.d_max},
                {"alpha_sigma", spec.alpha_sigma},
                {"noise_sigma", spec.noise_sigma},
                {"coherence_max", spec.coherence_max},
                {"seed", spec.seed},
                {"coherence", ds.coherence},
                {"format", format}};
  write_json(out_dir + "/manifest.json", manifest);
  std::cout << "wrote " << ds.Y.size() << " signals to " << out_dir
            << " (coherence " << ds.coherence << ")\n";
  return 0;
}

int cmd_decompose(const mssa::Problem& prob, const mssa::SolverConfig& cfg,
                  const std::string& out_dir, const std::string& format) {
  if (!fs::is_directory(out_dir)) {
    throw mssa::io_error("output directory does not exist: " + out_dir);
  }
  const mssa::SolveReport rep = mssa::solve(prob, cfg);
  mssa::write_matrix(out_dir + "/X_hat" + ext_for(format), rep.X_hat);
  json report{{"iterations", rep.iterations},
              {"converged", rep.converged},
              {"objective", rep.final_objective},
              {"h1", rep.h1},
              {"h2", rep.h2},
              {"mu1_0", rep.mu1_0},
              {"mu2_0", rep.mu2_0},
              {"reconstruction_error",
               (prob.Y - prob.Phi * rep.X_hat).norm() / prob.Y.norm()},
              {"wall_time", rep.wall_time},
              {"precompute_time", rep.precompute_time}};
  if (cfg.record_trace) {
    report["objective_trace"] = rep.objective_trace;
  }
  write_json(out_dir + "/report.json", report);
  std::cout << "objective " << rep.final_objective << " after "
            << rep.iterations << " iterations\n";
  return 0;
}

int cmd_tune(const mssa::Problem& prob, const mssa::SolverConfig& cfg) {
  const auto [mu1, mu2] = mssa::init_penalties(prob, cfg);
  json out{{"mu1_0", mu1}, {"mu2_0", mu2}};
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_bench(const std::string& preset, const std::string& scale,
              std::uint64_t seed, int reps, const std::string& out_dir) {
  if (!fs::is_directory(out_dir)) {
    throw mssa::io_error("output directory does not exist: " + out_dir);
  }
  json summary{{"preset", preset}, {"scale", scale}, {"seed", seed}};
  if (preset.rfind("speed-", 0) == 0) {
    const std::string name = preset.substr(6);
    const mssa::SpeedSetting setting = scale == "paper"
                                           ? mssa::paper_speed_preset(name)
                                           : mssa::desk_speed_preset(name);
    mssa::SpeedBenchOptions opts;
    opts.seed = seed;
    opts.reps = reps;
    const auto rows = mssa::run_speed_bench(setting, opts);
    mssa::write_speed_csv(out_dir + "/speed.csv", rows);
    std::size_t valid = 0;
    for (const auto& r : rows) valid += r.valid ? 1 : 0;
    summary["rows"] = rows.size();
    summary["valid_rows"] = valid;
    summary["reps"] = reps;
    summary["csv"] = "speed.csv";
    write_json(out_dir + "/summary.json", summary);
    return valid == 0 && !rows.empty() ? kExitNumeric : 0;
  }
  if (preset == "recovery") {
    mssa::RecoveryGridOptions opts;
    opts.seed = seed;
    opts.base.C = 20;
    opts.base.N_phi = 30;
    opts.base.alpha_sigma = 2.0;
    opts.base.coherence_max = 0.8;
    std::vector<mssa::RecoveryCellSpec> cells;
    if (scale == "paper") {
      opts.base.T = 300;
      opts.base.K = 100;
      for (mssa::Index M = 20; M <= 110; M += 10) {
        for (double d0 = 0.05; d0 < 0.95; d0 += 0.10) {
          cells.push_back({M, d0, d0 + 0.10});
        }
      }
    } else {
      opts.base.T = 120;
      opts.base.K = 40;
      for (mssa::Index M : {20, 50, 80, 110}) {
        for (double d0 : {0.05, 0.45, 0.85}) {
          cells.push_back({M, d0, d0 + 0.10});
        }
      }
    }
    const auto rows =
        mssa::run_recovery_grid(cells, mssa::all_recovery_methods(), opts);
    mssa::write_recovery_csv(out_dir + "/recovery.csv", rows);
    std::size_t ok = 0;
    for (const auto& r : rows) ok += r.ok ? 1 : 0;
    summary["rows"] = rows.size();
    summary["ok_rows"] = ok;
    summary["csv"] = "recovery.csv";
    write_json(out_dir + "/summary.json", summary);
    return ok == 0 && !rows.empty() ? kExitNumeric : 0;
  }
  throw CLI::ValidationError(
      "--preset", "must be speed-T1, speed-T2, speed-T3 or recovery");
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* threads = std::getenv("MSSA_NUM_THREADS")) {
    Eigen::setNbThreads(std::atoi(threads));
  }

  CLI::App app{"Structured sparse decomposition of multi-channel signals"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file (keys mirror the "
                                          "subcommand flags; unknown keys are "
                                          "rejected)");

  // synth -------------------------------------------------------------
  mssa::SynthSpec spec;
  std::string out_dir = ".";
  std::string format = "bin";
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--C", spec.C, "channels");
  synth->add_option("--T", spec.T, "samples");
  synth->add_option("--atoms", spec.N_phi, "dictionary atoms");
  synth->add_option("--signals", spec.K, "number of signals");
  synth->add_option("--activities", spec.M, "activities per signal");
  synth->add_option("--dmin", spec.d_min, "minimum duration fraction");
  synth->add_option("--dmax", spec.d_max, "maximum duration fraction");
  synth->add_option("--alpha-sigma", spec.alpha_sigma, "weight std dev");
  synth->add_option("--noise", spec.noise_sigma, "noise std dev");
  synth->add_option("--coherence-max", spec.coherence_max,
                    "dictionary coherence bound");
  synth->add_option("--seed", spec.seed, "RNG seed");
  synth->add_option("--out", out_dir, "output directory");
  synth->add_option("--format", format, "bin or csv");

  // decompose / tune ----------------------------------------------------
  std::string y_path, phi_path, p_path;
  bool use_tv = false;
  double lambda1 = 0.0, lambda2 = 0.0;
  mssa::SolverConfig scfg;
  double mu1_flag = 0.0, mu2_flag = 0.0;

  auto add_problem_flags = [&](CLI::App* cmd) {
    cmd->add_option("--Y", y_path, "signals file")->required();
    cmd->add_option("--Phi", phi_path, "dictionary file")->required();
    cmd->add_option("--P", p_path, "analysis matrix file");
    cmd->add_flag("--tv", use_tv, "use the consecutive-difference prior");
    cmd->add_option("--lambda1", lambda1, "sparsity weight");
    cmd->add_option("--lambda2", lambda2, "analysis weight");
  };

  CLI::App* dec = app.add_subcommand("decompose", "solve one decomposition");
  add_problem_flags(dec);
  dec->add_option("--eps", scfg.eps, "relative-change stopping tolerance");
  dec->add_option("--iter-max", scfg.iter_max, "iteration cap");
  dec->add_option("--mu1", mu1_flag, "initial mu1 (0 = heuristic)");
  dec->add_option("--mu2", mu2_flag, "initial mu2 (0 = heuristic)");
  dec->add_option("--o-floor", scfg.o_floor, "divisor floor");
  dec->add_flag("--trace", scfg.record_trace, "record the objective trace");
  dec->add_option("--out", out_dir, "output directory");
  dec->add_option("--format", format, "bin or csv");

  CLI::App* tune = app.add_subcommand("tune", "penalty initialization only");
  add_problem_flags(tune);

  // bench ---------------------------------------------------------------
  std::string preset = "speed-T1";
  std::string scale = "desk";
  std::uint64_t bench_seed = 1;
  int reps = 3;
  CLI::App* bench = app.add_subcommand("bench", "run a benchmark preset");
  bench->add_option("--preset", preset,
                    "speed-T1 | speed-T2 | speed-T3 | recovery");
  bench->add_option("--scale", scale, "desk or paper");
  bench->add_option("--seed", bench_seed, "RNG seed");
  bench->add_option("--reps", reps, "timing repetitions");
  bench->add_option("--out", out_dir, "output directory");

  try {
    const json cfg = load_config(argc, argv);
    if (!cfg.empty()) {
      for (CLI::App* cmd : {synth, dec, tune, bench}) {
        for (int i = 1; i < argc; ++i) {
          if (cmd->get_name() == argv[i]) {
            apply_config(cfg, cmd);
          }
        }
      }
    }
    app.parse(argc, argv);

    if (*synth) {
      return cmd_synth(spec, out_dir, format);
    }
    if (*dec || *tune) {
      mssa::Problem prob =
          load_problem(y_path, phi_path, p_path, use_tv, lambda1, lambda2);
      if (mu1_flag > 0.0 && mu2_flag > 0.0) {
        scfg.mu1_0 = mu1_flag;
        scfg.mu2_0 = mu2_flag;
      }
      return *dec ? cmd_decompose(prob, scfg, out_dir, format)
                  : cmd_tune(prob, scfg);
    }
    return cmd_bench(preset, scale, bench_seed, reps, out_dir);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  } catch (const mssa::io_error& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const mssa::numeric_error& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
}
