#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nfiscsc/experiments.hpp"

namespace {

std::vector<std::uint64_t> parse_seed_range(const std::string& s) {
  const auto dots = s.find("..");
  if (dots == std::string::npos)
    throw CLI::ValidationError("--seeds", "expected an inclusive range N..M");
  const std::uint64_t lo = std::stoull(s.substr(0, dots));
  const std::uint64_t hi = std::stoull(s.substr(dots + 2));
  if (hi < lo) throw CLI::ValidationError("--seeds", "range upper end below lower end");
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t v = lo; v <= hi; ++v) seeds.push_back(v);
  return seeds;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace nfiscsc;

  CLI::App app{"Seeded experiment sweeps for the fluid-antenna joint design; writes CSV."};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::string grid_arg;
  std::string seeds_arg;
  std::uint64_t seed = 0;
  bool no_semantic = false;

  for (ExperimentId id :
       {ExperimentId::convergence, ExperimentId::per_antenna_gain, ExperimentId::mse_vs_crb,
        ExperimentId::ssr_vs_crb, ExperimentId::compute_tradeoff,
        ExperimentId::antenna_scaling}) {
    CLI::App* sub = app.add_subcommand(experiment_name(id), "");
    sub->add_option("--config", config_path, "key = value settings file")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "single seed (default 0)");
    sub->add_option("--seeds", seeds_arg, "inclusive seed range N..M");
    sub->add_option("--out", out_path, "CSV output path (default <experiment>.csv)");
    sub->add_option("--grid", grid_arg, "comma-separated sweep values");
    sub->add_flag("--no-semantic", no_semantic, "pin every extraction ratio at 1");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentSpec spec;
    spec.id = parse_experiment_id(app.get_subcommands().front()->get_name());

    SystemConfig cfg = config_path.empty() ? SystemConfig{} : load_config(config_path);
    if (no_semantic) cfg.semantic_enabled = false;
    validate(cfg);

    spec.grid = grid_arg.empty() ? default_grid(spec.id, cfg)
                                 : detail::parse_list("--grid", grid_arg);
    spec.seeds = seeds_arg.empty() ? std::vector<std::uint64_t>{seed}
                                   : parse_seed_range(seeds_arg);
    spec.out_path =
        out_path.empty() ? std::string(experiment_name(spec.id)) + ".csv" : out_path;

    const std::vector<ResultRow> rows = run_experiment(spec, cfg);
    emit_csv(rows, spec.out_path);

    const int failed = count_failures(rows);
    std::printf("%s: wrote %zu rows to %s\n", experiment_name(spec.id), rows.size(),
                spec.out_path.c_str());
    if (failed > 0) {
      std::fprintf(stderr, "%s: %d of %zu sub-runs failed (see 'error' rows)\n",
                   experiment_name(spec.id), failed, spec.seeds.size() * spec.grid.size());
      return 2;
    }
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
