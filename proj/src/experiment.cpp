#include "cslr/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "cslr/io.hpp"
#include "cslr/schatten.hpp"

namespace cslr {

namespace fs = std::filesystem;

namespace {

constexpr int kManifestVersion = 1;

// ---- schema helpers -------------------------------------------------------

void allow_keys(const Json& o, std::initializer_list<const char*> keys, const std::string& where) {
  if (!o.is_object()) throw ConfigError(where + " must be an object");
  for (auto it = o.begin(); it != o.end(); ++it) {
    const bool known = std::any_of(keys.begin(), keys.end(),
                                   [&](const char* k) { return it.key() == k; });
    if (!known) throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

double number(const Json& v, const std::string& what) {
  if (!v.is_number()) throw ConfigError(what + " must be a number");
  return v.get<double>();
}

std::int64_t integer(const Json& v, const std::string& what) {
  if (!v.is_number_integer()) throw ConfigError(what + " must be an integer");
  return v.get<std::int64_t>();
}

std::uint64_t seed_value(const Json& v, const std::string& what) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
    throw ConfigError(what + " must be a non-negative integer");
  return v.get<std::uint64_t>();
}

bool boolean(const Json& v, const std::string& what) {
  if (!v.is_boolean()) throw ConfigError(what + " must be true or false");
  return v.get<bool>();
}

std::string text(const Json& v, const std::string& what) {
  if (!v.is_string()) throw ConfigError(what + " must be a string");
  return v.get<std::string>();
}

IndexVec index_list(const Json& v, const std::string& what) {
  if (!v.is_array() || v.empty()) throw ConfigError(what + " must be a non-empty array of integers");
  IndexVec out;
  for (const Json& e : v) out.push_back(integer(e, what));
  return out;
}

template <typename F>
auto list_of(const Json& v, const std::string& what, F&& each) {
  if (!v.is_array() || v.empty()) throw ConfigError(what + " must be a non-empty array");
  std::vector<decltype(each(v[0]))> out;
  for (const Json& e : v) out.push_back(each(e));
  return out;
}

IndexBox parse_box(const Json& o, const std::string& where) {
  allow_keys(o, {"extent", "offset"}, where);
  if (!o.contains("extent")) throw ConfigError(where + ".extent is required");
  const IndexVec ext = index_list(o["extent"], where + ".extent");
  if (!o.contains("offset")) return IndexBox::centered(ext);
  const IndexVec off = index_list(o["offset"], where + ".offset");
  return IndexBox(off, ext);
}

Json box_json(const IndexBox& b) { return Json{{"offset", b.offset()}, {"extent", b.extent()}}; }

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(master ^ splitmix64(stream));
}

std::string resolve_path(const std::string& base, const std::string& p) {
  fs::path path(p);
  if (path.is_relative()) path = fs::path(base) / path;
  return fs::absolute(path).lexically_normal().string();
}

// ---- sections -------------------------------------------------------------

AlgorithmConfig parse_algorithm(const Json& o, const std::string& where) {
  if (!o.is_object()) throw ConfigError(where + " must be an object");
  if (!o.contains("algorithm")) throw ConfigError(where + ".algorithm is required");
  const std::string name = text(o["algorithm"], where + ".algorithm");
  AlgorithmConfig alg;
  if (o.contains("label")) alg.label = text(o["label"], where + ".label");

  auto opt_number = [&](const char* key, std::optional<double>& out, const char* word) {
    if (!o.contains(key)) return;
    const Json& v = o[key];
    if (v.is_null() || (v.is_string() && v.get<std::string>() == word))
      out.reset();
    else
      out = number(v, where + "." + key);
  };

  if (name == "giraf") {
    allow_keys(o, {"algorithm", "label", "p", "lambda", "eps0", "eta", "eps_min", "outer_iters",
                   "ls_solver", "admm_iters", "delta", "cg_iters", "cg_tol", "oversample",
                   "oversample_factor", "tol", "record_timing"},
               where);
    SolverConfig& s = alg.solver;
    if (o.contains("p")) s.p = number(o["p"], where + ".p");
    opt_number("lambda", s.lambda, "equality");
    opt_number("eps0", s.eps0, "auto");
    if (o.contains("eta")) s.eta = number(o["eta"], where + ".eta");
    opt_number("eps_min", s.eps_min, "auto");
    if (o.contains("outer_iters")) s.outer_iters = static_cast<int>(integer(o["outer_iters"], where + ".outer_iters"));
    if (o.contains("ls_solver")) {
      const std::string ls = text(o["ls_solver"], where + ".ls_solver");
      if (ls == "admm")
        s.ls_solver = LsSolver::admm;
      else if (ls == "cg")
        s.ls_solver = LsSolver::cg;
      else
        throw ConfigError(where + ".ls_solver must be 'admm' or 'cg'");
    }
    if (o.contains("admm_iters")) s.admm_iters = static_cast<int>(integer(o["admm_iters"], where + ".admm_iters"));
    if (o.contains("delta")) s.delta = number(o["delta"], where + ".delta");
    if (o.contains("cg_iters")) s.cg_iters = static_cast<int>(integer(o["cg_iters"], where + ".cg_iters"));
    if (o.contains("cg_tol")) s.cg_tol = number(o["cg_tol"], where + ".cg_tol");
    if (o.contains("oversample")) s.oversample = boolean(o["oversample"], where + ".oversample");
    if (o.contains("oversample_factor")) s.oversample_factor = number(o["oversample_factor"], where + ".oversample_factor");
    if (o.contains("tol")) s.tol = number(o["tol"], where + ".tol");
    if (o.contains("record_timing")) s.record_timing = boolean(o["record_timing"], where + ".record_timing");
    s.validate();
    return alg;
  }

  alg.giraf = false;
  BaselineConfig& b = alg.baseline;
  b.algorithm = parse_baseline(name);
  if (b.algorithm == BaselineAlgorithm::irls)
    allow_keys(o, {"algorithm", "label", "p", "lambda", "eps0", "eta", "eps_min", "max_iters", "tol",
                   "cg_iters", "cg_tol", "record_timing"},
               where);
  else
    allow_keys(o, {"algorithm", "label", "lambda", "rank", "rank_threshold", "beta", "max_iters", "tol",
                   "record_timing"},
               where);
  if (o.contains("p")) b.p = number(o["p"], where + ".p");
  opt_number("lambda", b.lambda, "equality");
  opt_number("eps0", b.eps0, "auto");
  if (o.contains("eta")) b.eta = number(o["eta"], where + ".eta");
  opt_number("eps_min", b.eps_min, "auto");
  if (o.contains("rank")) {
    const Json& r = o["rank"];
    if (r.is_string() && r.get<std::string>() == "auto")
      alg.rank_auto = true;
    else
      b.rank = integer(r, where + ".rank");
  }
  if (o.contains("rank_threshold")) alg.rank_threshold = number(o["rank_threshold"], where + ".rank_threshold");
  if (o.contains("beta")) b.beta = number(o["beta"], where + ".beta");
  if (o.contains("max_iters")) b.max_iters = static_cast<int>(integer(o["max_iters"], where + ".max_iters"));
  if (o.contains("tol")) b.tol = number(o["tol"], where + ".tol");
  if (o.contains("cg_iters")) b.cg_iters = static_cast<int>(integer(o["cg_iters"], where + ".cg_iters"));
  if (o.contains("cg_tol")) b.cg_tol = number(o["cg_tol"], where + ".cg_tol");
  if (o.contains("record_timing")) b.record_timing = boolean(o["record_timing"], where + ".record_timing");
  if (!(alg.rank_threshold > 0.0 && alg.rank_threshold < 1.0))
    throw ConfigError(where + ".rank_threshold must lie in (0, 1)");
  BaselineConfig check = b;
  if (alg.rank_auto) check.rank = 1;
  check.validate();
  return alg;
}

Json algorithm_json(const AlgorithmConfig& alg) {
  auto opt = [](const std::optional<double>& v, const char* word) -> Json {
    return v ? Json(*v) : Json(word);
  };
  Json j;
  j["algorithm"] = alg.giraf ? "giraf" : to_string(alg.baseline.algorithm);
  if (!alg.label.empty()) j["label"] = alg.label;
  if (alg.giraf) {
    const SolverConfig& s = alg.solver;
    j["p"] = s.p;
    j["lambda"] = opt(s.lambda, "equality");
    j["eps0"] = opt(s.eps0, "auto");
    j["eta"] = s.eta;
    j["eps_min"] = opt(s.eps_min, "auto");
    j["outer_iters"] = s.outer_iters;
    j["ls_solver"] = s.ls_solver == LsSolver::admm ? "admm" : "cg";
    j["admm_iters"] = s.admm_iters;
    j["delta"] = s.delta;
    j["cg_iters"] = s.cg_iters;
    j["cg_tol"] = s.cg_tol;
    j["oversample"] = s.oversample;
    j["oversample_factor"] = s.oversample_factor;
    j["tol"] = s.tol;
    j["record_timing"] = s.record_timing;
    return j;
  }
  const BaselineConfig& b = alg.baseline;
  j["lambda"] = opt(b.lambda, "equality");
  j["max_iters"] = b.max_iters;
  j["tol"] = b.tol;
  j["record_timing"] = b.record_timing;
  if (b.algorithm == BaselineAlgorithm::irls) {
    j["p"] = b.p;
    j["eps0"] = opt(b.eps0, "auto");
    j["eta"] = b.eta;
    j["eps_min"] = opt(b.eps_min, "auto");
    j["cg_iters"] = b.cg_iters;
    j["cg_tol"] = b.cg_tol;
  } else {
    j["beta"] = b.beta;
    if (alg.rank_auto)
      j["rank"] = "auto";
    else if (b.rank)
      j["rank"] = *b.rank;
    j["rank_threshold"] = alg.rank_threshold;
  }
  return j;
}

BenchConfig parse_bench(const Json& o) {
  allow_keys(o, {"mode", "algorithms", "seeds", "usf", "oversample", "tol", "deltas", "inner_iters",
                 "warm_outer", "include_cg"},
             "bench");
  BenchConfig b;
  if (o.contains("mode")) {
    const std::string m = text(o["mode"], "bench.mode");
    if (m == "table")
      b.mode = BenchMode::table;
    else if (m == "oversampling")
      b.mode = BenchMode::oversampling;
    else if (m == "inner_solver")
      b.mode = BenchMode::inner_solver;
    else
      throw ConfigError("bench.mode must be 'table', 'oversampling' or 'inner_solver'");
  }
  if (o.contains("algorithms")) {
    int i = 0;
    b.algorithms = list_of(o["algorithms"], "bench.algorithms", [&](const Json& e) {
      return parse_algorithm(e, "bench.algorithms[" + std::to_string(i++) + "]");
    });
  }
  if (o.contains("seeds"))
    b.seeds = list_of(o["seeds"], "bench.seeds", [](const Json& e) { return seed_value(e, "bench.seeds"); });
  if (o.contains("usf"))
    b.usf = list_of(o["usf"], "bench.usf", [](const Json& e) { return number(e, "bench.usf"); });
  if (o.contains("oversample"))
    b.oversample = list_of(o["oversample"], "bench.oversample",
                           [](const Json& e) { return number(e, "bench.oversample"); });
  if (o.contains("tol")) b.tol = number(o["tol"], "bench.tol");
  if (o.contains("deltas"))
    b.deltas = list_of(o["deltas"], "bench.deltas", [](const Json& e) { return number(e, "bench.deltas"); });
  if (o.contains("inner_iters")) b.inner_iters = static_cast<int>(integer(o["inner_iters"], "bench.inner_iters"));
  if (o.contains("warm_outer")) b.warm_outer = static_cast<int>(integer(o["warm_outer"], "bench.warm_outer"));
  if (o.contains("include_cg")) b.include_cg = boolean(o["include_cg"], "bench.include_cg");

  for (double u : b.usf)
    if (!(u > 0.0 && u <= 1.0)) throw ConfigError("bench.usf entries must lie in (0, 1]");
  for (double f : b.oversample)
    if (!(f >= 1.0)) throw ConfigError("bench.oversample entries must be >= 1");
  for (double d : b.deltas)
    if (!(d >= 1.0)) throw ConfigError("bench.deltas entries must be >= 1");
  if (!(b.tol > 0.0)) throw ConfigError("bench.tol must be > 0");
  if (b.inner_iters < 1) throw ConfigError("bench.inner_iters must be >= 1");
  if (b.warm_outer < 1) throw ConfigError("bench.warm_outer must be >= 1");
  if (b.mode == BenchMode::oversampling && b.oversample.empty())
    throw ConfigError("bench.oversample is required in oversampling mode");
  if (b.mode != BenchMode::table)
    for (const AlgorithmConfig& a : b.algorithms)
      if (!a.giraf) throw ConfigError("bench mode only supports the giraf algorithm");
  return b;
}

Json bench_json(const BenchConfig& b) {
  Json j;
  j["mode"] = b.mode == BenchMode::table ? "table"
              : b.mode == BenchMode::oversampling ? "oversampling"
                                                  : "inner_solver";
  Json algs = Json::array();
  for (const AlgorithmConfig& a : b.algorithms) algs.push_back(algorithm_json(a));
  if (!algs.empty()) j["algorithms"] = algs;
  j["seeds"] = b.seeds;
  if (!b.usf.empty()) j["usf"] = b.usf;
  if (!b.oversample.empty()) j["oversample"] = b.oversample;
  j["tol"] = b.tol;
  j["deltas"] = b.deltas;
  j["inner_iters"] = b.inner_iters;
  j["warm_outer"] = b.warm_outer;
  j["include_cg"] = b.include_cg;
  return j;
}

// ---- outputs --------------------------------------------------------------

Json manifest(const std::string& command, const ExperimentConfig& cfg, const Json& files) {
  const Seeds s = resolve_seeds(cfg);
  return Json{{"format", "cslr-manifest"},
              {"version", kManifestVersion},
              {"command", command},
              {"config", config_to_json(cfg)},
              {"seeds", {{"signal", s.signal}, {"sampling", s.sampling}, {"noise", s.noise}}},
              {"files", files}};
}

void write_json(const std::string& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory '" + dir + "': " + ec.message());
}

std::string join(const std::string& dir, const std::string& file) { return (fs::path(dir) / file).string(); }

std::string p_column(const AlgorithmConfig& alg) {
  const auto p = alg.p();
  return p ? format_double(*p) : "";
}

// Runs tasks on `threads` workers; results keep task order.
std::vector<std::string> run_tasks(const std::vector<std::function<std::string()>>& tasks, int threads) {
  std::vector<std::string> out(tasks.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < tasks.size();) {
      try {
        out[i] = tasks[i]();
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min<int>(threads, static_cast<int>(tasks.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

ExperimentConfig with_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  ExperimentConfig c = cfg;
  override_seed(c, seed);
  return c;
}

std::string table_row(const ExperimentConfig& cfg, const AlgorithmConfig& alg, double usf,
                      std::uint64_t seed, double tol) {
  std::ostringstream row;
  row << cfg.name << ',' << alg.name() << ',' << p_column(alg) << ',' << format_double(usf) << ','
      << seed << ',';
  try {
    ExperimentConfig c = with_seed(cfg, seed);
    c.sampling.usf = usf;
    const Problem prob = build_problem(c);
    if (!prob.truth) throw ConfigError("bench requires ground truth");
    const RecoveryTrace tr = run_algorithm(alg, prob);
    const auto hit = std::find_if(tr.records.begin(), tr.records.end(),
                                  [&](const IterationRecord& r) { return r.nmse <= tol; });
    if (hit == tr.records.end())
      row << "Inf,Inf,";
    else
      row << hit->iter << ',' << format_double(hit->seconds) << ',';
    row << format_double(nmse(tr.x, *prob.truth)) << '\n';
  } catch (const BudgetError&) {
    row << "Mem,Mem,nan\n";
  } catch (const ConfigError&) {
    throw;
  } catch (const Error&) {
    row << "Err,Err,nan\n";
  }
  return row.str();
}

std::string oversampling_row(const ExperimentConfig& cfg, const AlgorithmConfig& alg, double factor,
                             std::uint64_t seed) {
  std::ostringstream row;
  row << cfg.name << ',' << alg.name() << ',' << p_column(alg) << ',' << format_double(factor) << ','
      << seed << ',';
  AlgorithmConfig a = alg;
  a.solver.oversample = factor > 1.0;
  a.solver.oversample_factor = factor > 1.0 ? factor : 0.0;
  try {
    const Problem prob = build_problem(with_seed(cfg, seed));
    if (!prob.truth) throw ConfigError("bench requires ground truth");
    const RecoveryTrace tr = run_algorithm(a, prob);
    row << format_double(nmse(tr.x, *prob.truth)) << '\n';
  } catch (const ConfigError&) {
    throw;
  } catch (const Error&) {
    row << "nan\n";
  }
  return row.str();
}

std::string inner_solver_rows(const ExperimentConfig& cfg, const AlgorithmConfig& alg,
                              const BenchConfig& bench, std::uint64_t seed) {
  const Problem prob = build_problem(with_seed(cfg, seed));
  const SolverConfig& s = alg.solver;
  const IndexBox box = solve_box(prob.spec, s);
  const LiftingSpec lift = box == prob.spec.data_box() ? prob.spec : prob.spec.with_data_box(box);
  const SamplingOp samp = box == prob.spec.data_box() ? prob.a : prob.a.embedded(box);

  SolverConfig warm = s;
  warm.oversample = false;
  warm.outer_iters = bench.warm_outer;
  warm.record_timing = false;
  const RecoveryTrace tr = giraf_solve(lift, samp, warm);
  const FilterState st = filter_update(lift, tr.x, tr.records.back().eps, s.p);
  const LsProblem ls{lift, samp, st.d, s.lambda, s.c_p()};

  ComplexGrid ref = tr.x;
  cg_ls(ls, ref, 20 * static_cast<int>(box.size()), 1e-14);
  const double ref_norm = ref.values().squaredNorm();
  auto nmsd = [&](const ComplexGrid& x) { return (x.values() - ref.values()).squaredNorm() / ref_norm; };

  std::ostringstream rows;
  auto emit = [&](const std::string& solver, const std::string& delta, int iter, double secs,
                  const ComplexGrid& x) {
    rows << seed << ',' << solver << ',' << delta << ',' << iter << ',' << format_double(secs) << ','
         << format_double(nmsd(x)) << '\n';
  };
  using Clock = std::chrono::steady_clock;
  for (double delta : bench.deltas) {
    ComplexGrid x = tr.x;
    emit("admm", format_double(delta), 0, 0.0, x);
    const auto t0 = Clock::now();
    admm_ls(ls, x, delta, bench.inner_iters, [&](int it, const ComplexGrid& cur) {
      const double secs = s.record_timing ? std::chrono::duration<double>(Clock::now() - t0).count() : 0.0;
      emit("admm", format_double(delta), it, secs, cur);
    });
  }
  if (bench.include_cg) {
    ComplexGrid x = tr.x;
    emit("cg", "", 0, 0.0, x);
    const auto t0 = Clock::now();
    cg_ls(ls, x, bench.inner_iters, 0.0, [&](int it, const ComplexGrid& cur) {
      const double secs = s.record_timing ? std::chrono::duration<double>(Clock::now() - t0).count() : 0.0;
      emit("cg", "", it, secs, cur);
    });
  }
  return rows.str();
}

}  // namespace

// ---- config ---------------------------------------------------------------

std::string AlgorithmConfig::name() const {
  if (!label.empty()) return label;
  if (giraf) return "giraf" + format_double(solver.p);
  if (baseline.algorithm == BaselineAlgorithm::irls) return "irls" + format_double(baseline.p);
  return to_string(baseline.algorithm);
}

std::optional<double> AlgorithmConfig::p() const {
  if (giraf) return solver.p;
  if (baseline.algorithm == BaselineAlgorithm::irls) return baseline.p;
  return std::nullopt;
}

ExperimentConfig parse_config(const Json& j, const std::string& base_dir) {
  try {
    allow_keys(j, {"name", "seed", "signal", "input", "data_box", "filter_box", "weighting", "sampling",
                   "noise", "solver", "bench"},
               "config");
    ExperimentConfig cfg;
    cfg.base_dir = base_dir;
    if (j.contains("name")) cfg.name = text(j["name"], "name");
    if (cfg.name.empty() || cfg.name.find_first_of(",\n\"") != std::string::npos)
      throw ConfigError("name must be non-empty and free of commas, quotes and newlines");
    if (j.contains("seed")) cfg.seed = seed_value(j["seed"], "seed");

    const bool has_signal = j.contains("signal") && !j["signal"].is_null();
    const bool has_input = j.contains("input") && !j["input"].is_null();
    if (has_signal == has_input) throw ConfigError("exactly one of 'signal' and 'input' is required");

    if (has_signal) {
      const Json& s = j["signal"];
      if (!s.is_object() || !s.contains("type")) throw ConfigError("signal.type is required");
      const std::string type = text(s["type"], "signal.type");
      SignalConfig sig;
      if (type == "dirac") {
        allow_keys(s, {"type", "r", "min_separation", "seed"}, "signal");
        sig.kind = SignalKind::dirac;
        if (s.contains("r")) sig.r = static_cast<std::size_t>(integer(s["r"], "signal.r"));
        if (s.contains("min_separation")) sig.min_separation = number(s["min_separation"], "signal.min_separation");
        if (sig.r < 1) throw ConfigError("signal.r must be >= 1");
        if (sig.min_separation < 0.0) throw ConfigError("signal.min_separation must be >= 0");
      } else if (type == "rects") {
        allow_keys(s, {"type", "count", "seed"}, "signal");
        sig.kind = SignalKind::rects;
        if (s.contains("count")) sig.count = static_cast<std::size_t>(integer(s["count"], "signal.count"));
        if (sig.count < 1) throw ConfigError("signal.count must be >= 1");
      } else if (type == "file") {
        allow_keys(s, {"type", "path"}, "signal");
        sig.kind = SignalKind::file;
        if (!s.contains("path")) throw ConfigError("signal.path is required");
        sig.path = resolve_path(base_dir, text(s["path"], "signal.path"));
      } else {
        throw ConfigError("signal.type must be 'dirac', 'rects' or 'file'");
      }
      if (s.contains("seed")) sig.seed = seed_value(s["seed"], "signal.seed");
      cfg.signal = sig;
    } else {
      const Json& in = j["input"];
      allow_keys(in, {"measured", "mask", "truth"}, "input");
      if (!in.contains("measured") || !in.contains("mask"))
        throw ConfigError("input.measured and input.mask are required");
      InputConfig ic;
      ic.measured = resolve_path(base_dir, text(in["measured"], "input.measured"));
      ic.mask = resolve_path(base_dir, text(in["mask"], "input.mask"));
      if (in.contains("truth") && !in["truth"].is_null())
        ic.truth = resolve_path(base_dir, text(in["truth"], "input.truth"));
      cfg.input = ic;
    }

    if (j.contains("data_box") && !j["data_box"].is_null()) cfg.data_box = parse_box(j["data_box"], "data_box");
    if (!j.contains("filter_box")) throw ConfigError("filter_box is required");
    cfg.filter_box = parse_box(j["filter_box"], "filter_box");
    if (cfg.signal && cfg.signal->kind != SignalKind::file && !cfg.data_box)
      throw ConfigError("data_box is required for synthetic signals");

    if (j.contains("weighting")) cfg.weighting = text(j["weighting"], "weighting");
    if (cfg.weighting != "identity" && cfg.weighting != "gradient")
      throw ConfigError("weighting must be 'identity' or 'gradient'");

    if (j.contains("sampling")) {
      const Json& s = j["sampling"];
      allow_keys(s, {"usf", "force_dc", "seed"}, "sampling");
      if (cfg.input) throw ConfigError("sampling does not apply to file input");
      if (s.contains("usf")) cfg.sampling.usf = number(s["usf"], "sampling.usf");
      if (s.contains("force_dc")) cfg.sampling.force_dc = boolean(s["force_dc"], "sampling.force_dc");
      if (s.contains("seed")) cfg.sampling.seed = seed_value(s["seed"], "sampling.seed");
    }
    if (!(cfg.sampling.usf > 0.0 && cfg.sampling.usf <= 1.0)) throw ConfigError("sampling.usf must lie in (0, 1]");

    if (j.contains("noise") && !j["noise"].is_null()) {
      const Json& n = j["noise"];
      allow_keys(n, {"snr_db", "seed"}, "noise");
      if (cfg.input) throw ConfigError("noise does not apply to file input");
      if (!n.contains("snr_db")) throw ConfigError("noise.snr_db is required");
      NoiseConfig nc;
      nc.snr_db = number(n["snr_db"], "noise.snr_db");
      if (n.contains("seed")) nc.seed = seed_value(n["seed"], "noise.seed");
      cfg.noise = nc;
    }

    if (j.contains("solver"))
      cfg.algorithm = parse_algorithm(j["solver"], "solver");
    else
      cfg.algorithm.solver.validate();
    if (j.contains("bench") && !j["bench"].is_null()) cfg.bench = parse_bench(j["bench"]);
    return cfg;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

ExperimentConfig load_config(const std::string& path) {
  const std::string body = read_text(path);
  Json j;
  try {
    j = Json::parse(body);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  const std::string base = fs::path(path).parent_path().string();
  if (j.is_object() && j.contains("format") && j["format"] == "cslr-manifest") {
    if (!j.contains("config")) throw ConfigError(path + ": manifest without config");
    return parse_config(j["config"], base.empty() ? "." : base);
  }
  return parse_config(j, base.empty() ? "." : base);
}

Json config_to_json(const ExperimentConfig& cfg) {
  const Seeds seeds = resolve_seeds(cfg);
  Json j;
  j["name"] = cfg.name;
  j["seed"] = cfg.seed;
  if (cfg.signal) {
    const SignalConfig& s = *cfg.signal;
    switch (s.kind) {
      case SignalKind::dirac:
        j["signal"] = {{"type", "dirac"}, {"r", s.r}, {"min_separation", s.min_separation}, {"seed", seeds.signal}};
        break;
      case SignalKind::rects:
        j["signal"] = {{"type", "rects"}, {"count", s.count}, {"seed", seeds.signal}};
        break;
      case SignalKind::file:
        j["signal"] = {{"type", "file"}, {"path", s.path}};
        break;
    }
    j["sampling"] = {{"usf", cfg.sampling.usf}, {"force_dc", cfg.sampling.force_dc}, {"seed", seeds.sampling}};
    if (cfg.noise) j["noise"] = {{"snr_db", cfg.noise->snr_db}, {"seed", seeds.noise}};
  } else {
    Json in{{"measured", cfg.input->measured}, {"mask", cfg.input->mask}};
    if (cfg.input->truth) in["truth"] = *cfg.input->truth;
    j["input"] = in;
  }
  if (cfg.data_box) j["data_box"] = box_json(*cfg.data_box);
  j["filter_box"] = box_json(cfg.filter_box);
  j["weighting"] = cfg.weighting;
  j["solver"] = algorithm_json(cfg.algorithm);
  if (cfg.bench) j["bench"] = bench_json(*cfg.bench);
  return j;
}

void override_seed(ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.seed = seed;
  if (cfg.signal) cfg.signal->seed.reset();
  cfg.sampling.seed.reset();
  if (cfg.noise) cfg.noise->seed.reset();
}

Seeds resolve_seeds(const ExperimentConfig& cfg) {
  Seeds s;
  s.signal = cfg.signal && cfg.signal->seed ? *cfg.signal->seed : derive_seed(cfg.seed, 1);
  s.sampling = cfg.sampling.seed ? *cfg.sampling.seed : derive_seed(cfg.seed, 2);
  s.noise = cfg.noise && cfg.noise->seed ? *cfg.noise->seed : derive_seed(cfg.seed, 3);
  return s;
}

std::vector<Weighting> make_weighting(const std::string& name, const IndexBox& box) {
  if (name == "identity") return {Weighting::identity()};
  if (name == "gradient") return gradient_weighting(box);
  throw ConfigError("unknown weighting '" + name + "'");
}

Problem build_problem(const ExperimentConfig& cfg) {
  const Seeds seeds = resolve_seeds(cfg);
  std::optional<ComplexGrid> truth;
  SamplingOp a;
  if (cfg.input) {
    ComplexGrid measured = read_grid(cfg.input->measured);
    const MaskGrid mask = grid_to_mask(read_grid(cfg.input->mask));
    if (mask.box() != measured.box()) throw DataError("input: mask and measurements have different boxes");
    if (cfg.data_box && *cfg.data_box != measured.box())
      throw DataError("input: measurements do not lie on data_box");
    a = SamplingOp{mask, ComplexGrid(measured.box())};
    a.measured = a.project(measured);
    if (cfg.input->truth) {
      truth = read_grid(*cfg.input->truth);
      if (truth->box() != measured.box()) throw DataError("input: ground truth box differs from measurements");
    }
  } else {
    const SignalConfig& sig = *cfg.signal;
    switch (sig.kind) {
      case SignalKind::dirac: {
        if (cfg.data_box->ndim() != 1) throw ConfigError("dirac signals need a 1-D data_box");
        const double sep = sig.min_separation > 0.0 ? sig.min_separation
                                                    : 2.0 / static_cast<double>(cfg.filter_box.extent(0));
        truth = dirac_fourier(random_diracs(sig.r, sep, seeds.signal), *cfg.data_box);
        break;
      }
      case SignalKind::rects:
        if (cfg.data_box->ndim() != 2) throw ConfigError("rects signals need a 2-D data_box");
        truth = rect_fourier(random_phantom(sig.count, seeds.signal), *cfg.data_box);
        break;
      case SignalKind::file:
        truth = read_grid(sig.path);
        if (cfg.data_box && *cfg.data_box != truth->box())
          throw DataError("signal file does not lie on data_box");
        break;
    }
    a = sample(*truth, random_mask(truth->box(), cfg.sampling.usf, seeds.sampling, cfg.sampling.force_dc));
    if (cfg.noise) a = add_noise(a, cfg.noise->snr_db, seeds.noise);
  }
  const IndexBox& box = a.box();
  if (cfg.filter_box.ndim() != box.ndim()) throw ConfigError("filter_box and data dimensionality differ");
  LiftingSpec spec(box, cfg.filter_box, make_weighting(cfg.weighting, box));
  return Problem{std::move(spec), std::move(truth), std::move(a)};
}

RecoveryTrace run_algorithm(const AlgorithmConfig& alg, const Problem& prob) {
  const ComplexGrid* truth = prob.truth ? &*prob.truth : nullptr;
  if (alg.giraf) {
    RecoveryTrace tr = giraf_solve(prob.spec, prob.a, alg.solver, truth);
    tr.algorithm = alg.name();
    return tr;
  }
  BaselineConfig b = alg.baseline;
  if (alg.rank_auto) {
    if (!truth) throw ConfigError("rank 'auto' requires ground truth");
    b.rank = std::max<Index>(1, numerical_rank(singular_values_dense(materialize_exact(prob.spec, *truth)),
                                               alg.rank_threshold));
  }
  RecoveryTrace tr = run_baseline(prob.spec, prob.a, b, truth);
  tr.algorithm = alg.name();
  return tr;
}

// ---- commands -------------------------------------------------------------

void run_gen(const ExperimentConfig& cfg, const std::string& out_dir) {
  const Problem prob = build_problem(cfg);
  ensure_dir(out_dir);
  Json files = Json::array();
  if (prob.truth) {
    write_grid(join(out_dir, "truth.cslr"), *prob.truth);
    files.push_back("truth.cslr");
  }
  write_grid(join(out_dir, "mask.cslr"), mask_to_grid(prob.a.mask));
  write_grid(join(out_dir, "measured.cslr"), prob.a.measured);
  files.push_back("mask.cslr");
  files.push_back("measured.cslr");
  files.push_back("manifest.json");
  write_json(join(out_dir, "manifest.json"), manifest("gen", cfg, files));
}

RecoveryTrace run_recover(const ExperimentConfig& cfg, const std::string& out_dir) {
  const Problem prob = build_problem(cfg);
  RecoveryTrace tr = run_algorithm(cfg.algorithm, prob);
  ensure_dir(out_dir);
  write_grid(join(out_dir, "recovered.cslr"), tr.x);
  write_text(join(out_dir, "trace.csv"), trace_csv(tr, prob.truth.has_value()));

  double weight_s = 0.0, ls_s = 0.0;
  for (const IterationRecord& r : tr.records) {
    weight_s += r.weight_seconds;
    ls_s += r.ls_seconds;
  }
  Json summary;
  summary["algorithm"] = tr.algorithm;
  summary["iterations"] = tr.iterations();
  summary["converged"] = tr.converged;
  summary["wall_seconds"] = tr.total_seconds();
  if (cfg.algorithm.giraf) {
    summary["weight_seconds"] = weight_s;
    summary["ls_seconds"] = ls_s;
  }
  summary["data_box"] = box_json(tr.x.box());
  if (prob.truth) {
    const double e = nmse(tr.x, *prob.truth);
    summary["final_nmse"] = finite_or_null(e);
    summary["snr_db"] = finite_or_null(snr_db(e));
  } else {
    summary["final_nmse"] = nullptr;
    summary["snr_db"] = nullptr;
  }
  write_json(join(out_dir, "summary.json"), summary);
  write_json(join(out_dir, "manifest.json"),
             manifest("recover", cfg, Json::array({"recovered.cslr", "trace.csv", "summary.json", "manifest.json"})));
  return tr;
}

void run_bench(const ExperimentConfig& cfg, const std::string& out_dir, int threads) {
  if (!cfg.bench) throw ConfigError("bench section is required");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  const BenchConfig& b = *cfg.bench;
  std::vector<AlgorithmConfig> algs = b.algorithms;
  if (algs.empty()) algs.push_back(cfg.algorithm);
  if (b.mode != BenchMode::table)
    for (const AlgorithmConfig& a : algs)
      if (!a.giraf) throw ConfigError("bench mode only supports the giraf algorithm");

  std::vector<std::function<std::string()>> tasks;
  std::string header;
  switch (b.mode) {
    case BenchMode::table: {
      header = "dataset,algorithm,p,usf,seed,iters_to_tol,seconds_to_tol,final_nmse\n";
      const std::vector<double> usfs = b.usf.empty() ? std::vector<double>{cfg.sampling.usf} : b.usf;
      for (const AlgorithmConfig& a : algs)
        for (double u : usfs)
          for (std::uint64_t s : b.seeds)
            tasks.push_back([&cfg, a, u, s, tol = b.tol] { return table_row(cfg, a, u, s, tol); });
      break;
    }
    case BenchMode::oversampling:
      header = "dataset,algorithm,p,oversample,seed,final_nmse\n";
      for (const AlgorithmConfig& a : algs)
        for (double f : b.oversample)
          for (std::uint64_t s : b.seeds)
            tasks.push_back([&cfg, a, f, s] { return oversampling_row(cfg, a, f, s); });
      break;
    case BenchMode::inner_solver:
      header = "seed,solver,delta,iter,seconds,nmsd\n";
      for (std::uint64_t s : b.seeds)
        tasks.push_back([&cfg, a = algs.front(), &b, s] { return inner_solver_rows(cfg, a, b, s); });
      break;
  }
  const std::vector<std::string> rows = run_tasks(tasks, threads);
  std::string csv = header;
  for (const std::string& r : rows) csv += r;
  ensure_dir(out_dir);
  write_text(join(out_dir, "bench.csv"), csv);
  write_json(join(out_dir, "manifest.json"), manifest("bench", cfg, Json::array({"bench.csv", "manifest.json"})));
}

CompareReport run_compare(const CompareOptions& opt) {
  if (opt.files.empty() || (opt.files.size() < 2 && !opt.truth))
    throw ConfigError("compare needs two grids, or one grid and --truth");
  std::vector<ComplexGrid> grids;
  for (const std::string& f : opt.files) grids.push_back(read_grid(f));
  std::optional<ComplexGrid> truth;
  if (opt.truth) truth = read_grid(*opt.truth);
  for (std::size_t i = 0; i < grids.size(); ++i) {
    if (grids[i].box() != grids[0].box())
      throw DataError(opt.files[i] + " lies on " + grids[i].box().str() + ", expected " + grids[0].box().str());
    if (truth && truth->box() != grids[i].box())
      throw DataError(opt.files[i] + " does not lie on the ground truth box " + truth->box().str());
  }

  CompareReport rep;
  std::ostringstream os;
  std::vector<double> errors;
  if (truth) {
    os << "file,nmse,snr_db\n";
    for (std::size_t i = 0; i < grids.size(); ++i) {
      const double e = nmse(grids[i], *truth);
      errors.push_back(e);
      os << opt.files[i] << ',' << format_double(e) << ',' << format_double(snr_db(e)) << '\n';
      if (opt.max_nmse && !(e <= *opt.max_nmse)) rep.ok = false;
    }
  }
  os << "file_a,file_b,max_abs_diff" << (truth ? ",nmse_diff" : "") << '\n';
  for (std::size_t i = 0; i < grids.size(); ++i) {
    for (std::size_t k = i + 1; k < grids.size(); ++k) {
      const double diff = (grids[i].values() - grids[k].values()).cwiseAbs().maxCoeff();
      os << opt.files[i] << ',' << opt.files[k] << ',' << format_double(diff);
      if (opt.max_diff && !(diff <= *opt.max_diff)) rep.ok = false;
      if (truth) {
        const double d = std::abs(errors[i] - errors[k]);
        os << ',' << format_double(d);
        if (opt.max_nmse_diff && !(d <= *opt.max_nmse_diff)) rep.ok = false;
      }
      os << '\n';
    }
  }
  os << (rep.ok ? "result,pass\n" : "result,fail\n");
  rep.text = os.str();
  return rep;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const DataError*>(&e)) return 3;
  if (dynamic_cast<const SolverError*>(&e)) return 4;
  return 1;
}

Json error_json(const std::exception& e) {
  std::string kind = "internal";
  if (dynamic_cast<const ConfigError*>(&e))
    kind = "config";
  else if (dynamic_cast<const DataError*>(&e))
    kind = "data";
  else if (dynamic_cast<const BudgetError*>(&e))
    kind = "budget";
  else if (dynamic_cast<const SolverError*>(&e))
    kind = "solver";
  return Json{{"error", kind}, {"message", e.what()}, {"exit_code", exit_code_for(e)}};
}

}  // namespace cslr
