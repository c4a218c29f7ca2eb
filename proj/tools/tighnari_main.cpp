#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tigh/config.hpp"
#include "tigh/csv.hpp"
#include "tigh/errors.hpp"
#include "tigh/pipeline.hpp"

namespace {

// One machine-readable line on stderr, one exit code per failure category.
int fail(const char* category, int code, const std::string& message) {
  nlohmann::json line{{"error", category}, {"message", message}};
  std::fprintf(stderr, "%s\n", line.dump().c_str());
  return code;
}

void run_stage(const std::string& cmd, const tigh::RunConfig& rc) {
  tigh::StagePaths paths = tigh::StagePaths::from_run(rc);
  if (cmd == "synth") {
    tigh::run_synth(rc);
    std::printf("synth: wrote %s\n", paths.raw.c_str());
  } else if (cmd == "prep") {
    tigh::run_prep(rc);
    std::printf("prep: wrote %s\n", paths.prep.c_str());
  } else if (cmd == "graph") {
    tigh::run_graph(rc);
    std::printf("graph: wrote %s\n", paths.graph.c_str());
  } else if (cmd == "train") {
    tigh::run_train(rc);
    std::printf("train: wrote %s\n", paths.train.c_str());
  } else if (cmd == "predict") {
    tigh::run_predict(rc);
    std::printf("predict: wrote %s\n", paths.predict.c_str());
  } else if (cmd == "tune") {
    tigh::GridResult g = tigh::run_tune(rc);
    std::printf("tune: best K=%d theta=%s f1=%s\n", g.best_k,
                tigh::format_fixed(g.best_theta, 6).c_str(),
                tigh::format_fixed(g.best_f1, 6).c_str());
  } else if (cmd == "score") {
    double f1 = tigh::run_score(rc);
    std::printf("%s\n", tigh::format_fixed(f1, 6).c_str());
  } else if (cmd == "report") {
    tigh::run_report(rc);
    std::printf("report: wrote %s\n", paths.report.c_str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-modal plant species prediction pipeline"};
  app.require_subcommand(1);

  std::string config_path, threads, seed;
  const std::vector<std::string> stage_names = {"synth", "prep",  "graph", "train", "predict",
                                                "tune",  "score", "report"};
  for (const auto& name : stage_names) {
    CLI::App* sub = app.add_subcommand(name, name + " stage");
    sub->add_option("--config", config_path, "key = value config file");
    sub->add_option("--threads", threads, "worker threads (1 = deterministic)");
    sub->add_option("--seed", seed, "root random seed");
  }
  CLI::App* all = app.add_subcommand("run", "every stage in order");
  all->add_option("--config", config_path, "key = value config file");
  all->add_option("--threads", threads, "worker threads (1 = deterministic)");
  all->add_option("--seed", seed, "root random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail("usage", 2, e.what());
  }

  std::string cmd = app.get_subcommands().front()->get_name();
  try {
    tigh::RunConfig rc = tigh::RunConfig::load(config_path);
    if (!threads.empty()) rc.set("threads", threads);
    if (!seed.empty()) rc.set("seed", seed);
    if (cmd == "run") {
      for (const auto& name : stage_names) run_stage(name, rc);
    } else {
      run_stage(cmd, rc);
    }
  } catch (const tigh::ConfigError& e) {
    return fail("config", 2, e.what());
  } catch (const tigh::IoError& e) {
    return fail("io", 4, e.what());
  } catch (const tigh::DivergenceError& e) {
    return fail("divergence", 5, e.what());
  } catch (const tigh::ShapeError& e) {
    return fail("shape", 3, e.what());
  } catch (const tigh::InputError& e) {
    return fail("input", 3, e.what());
  } catch (const tigh::Error& e) {
    return fail("error", 1, e.what());
  } catch (const std::exception& e) {
    return fail("internal", 1, e.what());
  }
  return 0;
}
