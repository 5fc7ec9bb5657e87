// Benchmark command-line front end: single runs, replicate suites, record
// aggregation, SVG regret plots, timing tables, and the problem listing.
// This binary performs all file I/O; the library stays in-memory.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "cobalt/loop.hpp"
#include "cobalt/records.hpp"
#include "cobalt/testbed.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kUsageError = 2;

struct CliDefaults {
  std::string problem;
  std::string variant = "mwb2cf";
  int budget = 60;
  int init_count = 0;
  int m_samples = 100;
  double beta = 100.0;
  double tau0 = -3.0;
  std::string kernel = "matern5";
  int n_starts = 10;
  std::uint64_t seed = 0;
  int replicates = 20;
  int jobs = 1;
};

// config precedence: flags > JSON config file > built-in defaults
void apply_config_file(const std::string& path, CliDefaults& d) {
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("--config", "cannot read " + path);
  json j;
  in >> j;
  auto get = [&j](const char* key, auto& out) {
    if (j.contains(key)) out = j.at(key).get<std::decay_t<decltype(out)>>();
  };
  get("problem", d.problem);
  get("variant", d.variant);
  get("budget", d.budget);
  get("init_count", d.init_count);
  get("m_samples", d.m_samples);
  get("beta", d.beta);
  get("tau0", d.tau0);
  get("kernel", d.kernel);
  get("n_starts", d.n_starts);
  get("seed", d.seed);
  get("replicates", d.replicates);
  get("jobs", d.jobs);
}

cobalt::RunConfig build_config(const CliDefaults& d) {
  cobalt::RunConfig cfg;
  cfg.budget = d.budget;
  cfg.init_count = d.init_count;
  cfg.m_samples = d.m_samples;
  cfg.beta = d.beta;
  cfg.tau0 = d.tau0;
  cfg.kernel = cobalt::kernel_from_name(d.kernel);
  cfg.n_starts = d.n_starts;
  cfg.seed = d.seed;
  cfg.variant = cobalt::variant_from_name(d.variant);
  return cfg;
}

cobalt::RunRecord run_one(const std::string& problem_name,
                          const cobalt::RunConfig& cfg, bool with_oracle) {
  cobalt::GreyBoxProblem problem = cobalt::make_problem(problem_name);
  double true_min = std::numeric_limits<double>::quiet_NaN();
  if (with_oracle) true_min = cobalt::reference_optimum(problem_name).regret_reference;
  return cobalt::run_experiment(problem, cfg, true_min);
}

std::vector<cobalt::RunRecord> read_records(
    const std::vector<std::string>& paths) {
  std::vector<cobalt::RunRecord> records;
  for (const auto& p : paths) records.push_back(cobalt::read_record(p));
  return records;
}

int cmd_list_problems() {
  for (const auto& name : cobalt::problem_names()) {
    cobalt::GreyBoxProblem p = cobalt::make_problem(name);
    const auto& spec = cobalt::problem_spec(name);
    std::cout << name << "  n_x=" << p.dim_x << " n_y=" << p.dim_y
              << " n_z=" << p.dim_z << " n_g=" << p.num_g
              << " stated_min=" << spec.stated_value
              << (spec.printed_form_discrepancy ? "  (corrected form)" : "")
              << "\n";
  }
  return 0;
}

int cmd_timing(const std::vector<std::string>& paths) {
  for (const auto& path : paths) {
    if (!fs::exists(path + ".timings.json")) {
      std::cerr << "warning: no timing sidecar for " << path << ", skipped\n";
      continue;
    }
    cobalt::RunRecord rec = cobalt::read_record(path);
    std::cout << "# " << path << " (" << rec.problem << ", "
              << cobalt::variant_name(rec.config.variant) << ")\n";
    std::cout << "iteration,t_gp_entries,t_gp_total,t_opt,t_eval\n";
    for (std::size_t i = 0; i < rec.iterations.size(); ++i) {
      const auto& it = rec.iterations[i];
      double gp_total = 0.0;
      std::ostringstream entries;
      for (std::size_t j = 0; j < it.t_gp.size(); ++j) {
        gp_total += it.t_gp[j];
        entries << (j ? ";" : "") << it.t_gp[j];
      }
      std::cout << i << ',' << entries.str() << ',' << gp_total << ','
                << it.t_opt << ',' << it.t_eval << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grey-box Bayesian optimization benchmark harness"};
  app.require_subcommand(1);

  CliDefaults d;
  std::string config_path;
  // resolve the config file before flag parsing so flags win
  for (int i = 1; i < argc - 1; ++i) {
    if (std::string(argv[i]) == "--config") config_path = argv[i + 1];
  }
  try {
    if (!config_path.empty()) apply_config_file(config_path, d);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  }
  app.add_option("--config", config_path, "JSON config file with defaults");

  auto add_run_flags = [&](CLI::App* sub) {
    // accepted after the subcommand too; the value itself is pre-scanned
    sub->add_option("--config", config_path, "JSON config file with defaults");
    sub->add_option("--problem", d.problem, "problem name")->required();
    sub->add_option("--variant", d.variant, "acquisition variant");
    sub->add_option("--budget", d.budget, "total black-box evaluations");
    sub->add_option("--init-count", d.init_count,
                    "initial design size (0 = default)");
    sub->add_option("--m-samples", d.m_samples, "posterior draws");
    sub->add_option("--beta", d.beta, "scale multiplier");
    sub->add_option("--tau0", d.tau0, "initial trust level");
    sub->add_option("--kernel", d.kernel, "kernel (sqexp/matern1/3/5)");
    sub->add_option("--n-starts", d.n_starts, "subproblem multistarts");
  };

  // run
  auto* run = app.add_subcommand("run", "single run, writes one record");
  add_run_flags(run);
  std::string out_path = "record.json";
  bool no_oracle = false;
  run->add_option("--seed", d.seed, "run seed");
  run->add_option("--out", out_path, "record output path");
  run->add_flag("--no-oracle", no_oracle, "skip regret tracking");

  // replicate
  auto* rep = app.add_subcommand("replicate", "seeded replicate suite");
  add_run_flags(rep);
  std::string out_dir = "records";
  rep->add_option("--replicates", d.replicates, "replicate count");
  rep->add_option("--base-seed", d.seed, "seed of replicate 0");
  rep->add_option("--out-dir", out_dir, "output directory");
  rep->add_option("--jobs", d.jobs, "parallel workers");
  rep->add_flag("--no-oracle", no_oracle, "skip regret tracking");

  // aggregate
  auto* agg = app.add_subcommand("aggregate", "records -> CSV");
  std::vector<std::string> record_paths;
  std::string csv_out = "aggregate.csv";
  agg->add_option("records", record_paths, "record JSON files")->required();
  agg->add_option("--out", csv_out, "CSV output path");

  // plot
  auto* plot = app.add_subcommand("plot", "CSV -> SVG regret curves");
  std::string csv_in, svg_out = "regret.svg";
  plot->add_option("csv", csv_in, "aggregate CSV")->required();
  plot->add_option("--out", svg_out, "SVG output path");

  // timing
  auto* timing = app.add_subcommand("timing", "per-iteration timing table");
  std::vector<std::string> timing_paths;
  timing->add_option("records", timing_paths, "record JSON files")->required();

  app.add_subcommand("list-problems", "show the problem registry");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (app.got_subcommand("list-problems")) return cmd_list_problems();
    if (app.got_subcommand("timing")) return cmd_timing(timing_paths);

    if (app.got_subcommand("run")) {
      cobalt::RunConfig cfg = build_config(d);
      cobalt::RunRecord rec = run_one(d.problem, cfg, !no_oracle);
      cobalt::write_record(out_path, rec);
      std::cout << "wrote " << out_path
                << " final_incumbent=" << rec.final_incumbent() << "\n";
      return rec.aborted ? 1 : 0;
    }

    if (app.got_subcommand("replicate")) {
      cobalt::RunConfig base_cfg = build_config(d);
      fs::create_directories(out_dir);
      std::atomic<int> next{0};
      std::atomic<bool> failed{false};
      auto worker = [&] {
        for (int r = next.fetch_add(1); r < d.replicates;
             r = next.fetch_add(1)) {
          try {
            cobalt::RunConfig cfg = base_cfg;
            cfg.seed = base_cfg.seed + static_cast<std::uint64_t>(r);
            cobalt::RunRecord rec = run_one(d.problem, cfg, !no_oracle);
            std::string path = out_dir + "/rec_" + d.problem + "_" +
                               d.variant + "_" + std::to_string(cfg.seed) +
                               ".json";
            cobalt::write_record(path, rec);
          } catch (const std::exception& e) {
            std::cerr << "replicate " << r << " failed: " << e.what() << "\n";
            failed = true;
          }
        }
      };
      // warm the oracle cache once before spawning workers
      if (!no_oracle) cobalt::reference_optimum(d.problem);
      int jobs = std::max(1, d.jobs);
      std::vector<std::thread> pool;
      for (int t = 0; t < jobs - 1; ++t) pool.emplace_back(worker);
      worker();
      for (auto& t : pool) t.join();
      return failed ? 1 : 0;
    }

    if (app.got_subcommand("aggregate")) {
      std::sort(record_paths.begin(), record_paths.end());
      std::string concat;
      for (const auto& p : record_paths) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        concat += ss.str();
      }
      std::vector<cobalt::RunRecord> records = read_records(record_paths);
      auto rows = cobalt::aggregate(records);
      std::ofstream out(csv_out, std::ios::binary);
      out << cobalt::aggregate_to_csv(rows, cobalt::content_hash(concat));
      std::cout << "wrote " << csv_out << "\n";
      return 0;
    }

    if (app.got_subcommand("plot")) {
      std::ifstream in(csv_in, std::ios::binary);
      if (!in) {
        std::cerr << "error: cannot read " << csv_in << "\n";
        return kUsageError;
      }
      std::ostringstream ss;
      ss << in.rdbuf();
      auto rows = cobalt::aggregate_from_csv(ss.str());
      if (rows.empty()) {
        std::cerr << "error: empty CSV\n";
        return kUsageError;
      }
      std::ofstream out(svg_out, std::ios::binary);
      out << cobalt::regret_curves_svg(rows);
      std::cout << "wrote " << svg_out << "\n";
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
