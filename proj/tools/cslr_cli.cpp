#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cslr/errors.hpp"
#include "cslr/experiment.hpp"
#include "cslr/io.hpp"

namespace {

void report(const std::exception& e, const std::string& out_dir) {
  const cslr::Json err = cslr::error_json(e);
  std::cerr << err.dump() << '\n';
  if (out_dir.empty()) return;
  try {
    std::filesystem::create_directories(out_dir);
    cslr::write_text((std::filesystem::path(out_dir) / "error.json").string(), err.dump(2) + "\n");
  } catch (...) {
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convolutional structured low-rank recovery of Fourier data"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  int threads = 1;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Experiment configuration (JSON) or manifest")->required();
    cmd->add_option("--out", out_dir, "Output directory")->required();
    cmd->add_option("--seed", seed, "Override the master seed");
  };
  CLI::App* gen = app.add_subcommand("gen", "Synthesize ground truth, mask and measurements");
  add_common(gen);
  CLI::App* recover = app.add_subcommand("recover", "Recover a grid from measurements");
  add_common(recover);
  CLI::App* bench = app.add_subcommand("bench", "Run a benchmark sweep");
  add_common(bench);
  bench->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  cslr::CompareOptions cmp;
  CLI::App* compare = app.add_subcommand("compare", "Compare recovered grids");
  compare->add_option("files", cmp.files, "CSLR1 grids")->required();
  compare->add_option("--truth", cmp.truth, "Ground truth grid");
  compare->add_option("--max-nmse", cmp.max_nmse, "Largest allowed NMSE per file");
  compare->add_option("--max-nmse-diff", cmp.max_nmse_diff, "Largest allowed pairwise NMSE difference");
  compare->add_option("--max-diff", cmp.max_diff, "Largest allowed pairwise max-abs difference");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (compare->parsed()) {
      const cslr::CompareReport rep = cslr::run_compare(cmp);
      std::cout << rep.text;
      return rep.ok ? 0 : 1;
    }
    cslr::ExperimentConfig cfg = cslr::load_config(config_path);
    if (seed) cslr::override_seed(cfg, *seed);
    if (gen->parsed()) {
      cslr::run_gen(cfg, out_dir);
    } else if (recover->parsed()) {
      const cslr::RecoveryTrace tr = cslr::run_recover(cfg, out_dir);
      std::cout << tr.algorithm << ": " << tr.iterations() << " iterations\n";
    } else {
      cslr::run_bench(cfg, out_dir, threads);
    }
    return 0;
  } catch (const std::exception& e) {
    report(e, out_dir);
    return cslr::exit_code_for(e);
  }
}
