#include "cobalt/records.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace cobalt {

namespace {

using nlohmann::json;
using Vec = Eigen::VectorXd;

// ---- SHA-1 (needed for git-style blob hashes; <functional> has none) ----

struct Sha1 {
  std::uint32_t h[5] = {0x67452301u, 0xEFCDAB89u, 0x98BADCFEu, 0x10325476u,
                        0xC3D2E1F0u};
  std::uint64_t total = 0;
  unsigned char buf[64];
  std::size_t fill = 0;

  static std::uint32_t rol(std::uint32_t x, int s) {
    return (x << s) | (x >> (32 - s));
  }

  void block(const unsigned char* p) {
    std::uint32_t w[80];
    for (int i = 0; i < 16; ++i) {
      w[i] = (std::uint32_t(p[4 * i]) << 24) |
             (std::uint32_t(p[4 * i + 1]) << 16) |
             (std::uint32_t(p[4 * i + 2]) << 8) | std::uint32_t(p[4 * i + 3]);
    }
    for (int i = 16; i < 80; ++i) {
      w[i] = rol(w[i - 3] ^ w[i - 8] ^ w[i - 14] ^ w[i - 16], 1);
    }
    std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4];
    for (int i = 0; i < 80; ++i) {
      std::uint32_t f, k;
      if (i < 20) {
        f = (b & c) | (~b & d);
        k = 0x5A827999u;
      } else if (i < 40) {
        f = b ^ c ^ d;
        k = 0x6ED9EBA1u;
      } else if (i < 60) {
        f = (b & c) | (b & d) | (c & d);
        k = 0x8F1BBCDCu;
      } else {
        f = b ^ c ^ d;
        k = 0xCA62C1D6u;
      }
      std::uint32_t t = rol(a, 5) + f + e + k + w[i];
      e = d;
      d = c;
      c = rol(b, 30);
      b = a;
      a = t;
    }
    h[0] += a;
    h[1] += b;
    h[2] += c;
    h[3] += d;
    h[4] += e;
  }

  void update(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    total += len;
    while (len > 0) {
      std::size_t take = std::min(len, sizeof(buf) - fill);
      std::copy(p, p + take, buf + fill);
      fill += take;
      p += take;
      len -= take;
      if (fill == sizeof(buf)) {
        block(buf);
        fill = 0;
      }
    }
  }

  std::string hex_digest() {
    std::uint64_t bits = total * 8;
    unsigned char pad = 0x80;
    update(&pad, 1);
    unsigned char zero = 0;
    while (fill != 56) update(&zero, 1);
    unsigned char len8[8];
    for (int i = 0; i < 8; ++i) {
      len8[i] = static_cast<unsigned char>(bits >> (56 - 8 * i));
    }
    update(len8, 8);
    char out[41];
    for (int i = 0; i < 5; ++i) std::snprintf(out + 8 * i, 9, "%08x", h[i]);
    return std::string(out, 40);
  }
};

// ---- JSON helpers ----

json vec_to_json(const Vec& v) {
  json arr = json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Vec vec_from_json(const json& arr) {
  Vec v(arr.size());
  for (int i = 0; i < static_cast<int>(arr.size()); ++i) {
    v(i) = arr[i].get<double>();
  }
  return v;
}

// non-finite values (infinite incumbents, unset regrets) serialize as null
json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

double null_to_inf(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::infinity();
  return j.get<double>();
}

json config_to_json(const RunConfig& c) {
  return json{{"budget", c.budget},
              {"init_count", c.init_count},
              {"m_samples", c.m_samples},
              {"beta", c.beta},
              {"tau0", c.tau0},
              {"kernel", kernel_name(c.kernel)},
              {"n_starts", c.n_starts},
              {"seed", c.seed},
              {"variant", variant_name(c.variant)}};
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  c.budget = j.at("budget").get<int>();
  c.init_count = j.at("init_count").get<int>();
  c.m_samples = j.at("m_samples").get<int>();
  c.beta = j.at("beta").get<double>();
  c.tau0 = j.at("tau0").get<double>();
  c.kernel = kernel_from_name(j.at("kernel").get<std::string>());
  c.n_starts = j.at("n_starts").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.variant = variant_from_name(j.at("variant").get<std::string>());
  return c;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

std::string content_hash(const std::string& content) {
  Sha1 sha;
  std::string header = "blob " + std::to_string(content.size());
  sha.update(header.data(), header.size() + 1);  // includes the NUL
  sha.update(content.data(), content.size());
  return sha.hex_digest();
}

namespace {

json mat_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    rows.push_back(vec_to_json(m.row(i).transpose()));
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", rows}};
}

Eigen::MatrixXd mat_from_json(const json& j) {
  Eigen::MatrixXd m(j.at("rows").get<int>(), j.at("cols").get<int>());
  for (int i = 0; i < m.rows(); ++i) {
    m.row(i) = vec_from_json(j.at("data")[i]).transpose();
  }
  return m;
}

}  // namespace

std::string gp_model_to_json(const GPModel& model) {
  json j;
  j["schema_version"] = kRecordSchemaVersion;
  j["kernel"] = json{{"kind", kernel_name(model.kernel.kind)},
                     {"signal_var", model.kernel.signal_var},
                     {"lengthscales", vec_to_json(model.kernel.lengthscales)}};
  j["noise_var"] = model.noise_var;
  j["jitter"] = model.jitter;
  j["train_inputs"] = mat_to_json(model.train_inputs);
  j["train_targets"] = vec_to_json(model.train_targets);
  j["input_lo"] = vec_to_json(model.input_lo);
  j["input_range"] = vec_to_json(model.input_range);
  j["output_mean"] = model.output_mean;
  j["output_scale"] = model.output_scale;
  j["chol"] = mat_to_json(model.chol);
  j["alpha"] = vec_to_json(model.alpha);
  return j.dump(2) + "\n";
}

GPModel gp_model_from_json(const std::string& json_text) {
  json j = json::parse(json_text);
  if (j.at("schema_version").get<int>() != kRecordSchemaVersion) {
    throw std::runtime_error("unsupported surrogate schema version");
  }
  GPModel m;
  m.kernel.kind = kernel_from_name(j.at("kernel").at("kind").get<std::string>());
  m.kernel.signal_var = j.at("kernel").at("signal_var").get<double>();
  m.kernel.lengthscales = vec_from_json(j.at("kernel").at("lengthscales"));
  m.noise_var = j.at("noise_var").get<double>();
  m.jitter = j.at("jitter").get<double>();
  m.train_inputs = mat_from_json(j.at("train_inputs"));
  m.train_targets = vec_from_json(j.at("train_targets"));
  m.input_lo = vec_from_json(j.at("input_lo"));
  m.input_range = vec_from_json(j.at("input_range"));
  m.output_mean = j.at("output_mean").get<double>();
  m.output_scale = j.at("output_scale").get<double>();
  m.chol = mat_from_json(j.at("chol"));
  m.alpha = vec_from_json(j.at("alpha"));
  return m;
}

std::string record_to_json(const RunRecord& record) {
  json j;
  j["schema_version"] = kRecordSchemaVersion;
  j["problem"] = record.problem;
  j["config"] = config_to_json(record.config);
  j["aborted"] = record.aborted;
  j["abort_reason"] = record.abort_reason;
  json iters = json::array();
  for (const auto& it : record.iterations) {
    iters.push_back(json{{"x", vec_to_json(it.x)},
                         {"y", vec_to_json(it.y)},
                         {"objective", it.objective},
                         {"constraints", vec_to_json(it.constraint_values)},
                         {"feasible", it.feasible},
                         {"incumbent", finite_or_null(it.incumbent)},
                         {"log10_regret", finite_or_null(it.log10_regret)},
                         {"tau", vec_to_json(it.tau)},
                         {"scale", it.scale}});
  }
  j["iterations"] = std::move(iters);
  return j.dump(2) + "\n";
}

RunRecord record_from_json(const std::string& json_text) {
  json j = json::parse(json_text);
  if (j.at("schema_version").get<int>() != kRecordSchemaVersion) {
    throw std::runtime_error("unsupported record schema version");
  }
  RunRecord record;
  record.problem = j.at("problem").get<std::string>();
  record.config = config_from_json(j.at("config"));
  record.aborted = j.at("aborted").get<bool>();
  record.abort_reason = j.at("abort_reason").get<std::string>();
  for (const auto& ij : j.at("iterations")) {
    IterationRecord it;
    it.x = vec_from_json(ij.at("x"));
    it.y = vec_from_json(ij.at("y"));
    it.objective = ij.at("objective").get<double>();
    it.constraint_values = vec_from_json(ij.at("constraints"));
    it.feasible = ij.at("feasible").get<bool>();
    it.incumbent = null_to_inf(ij.at("incumbent"));
    const auto& rj = ij.at("log10_regret");
    it.log10_regret = rj.is_null()
                          ? (std::isfinite(it.incumbent)
                                 ? std::numeric_limits<double>::quiet_NaN()
                                 : std::numeric_limits<double>::infinity())
                          : rj.get<double>();
    it.tau = vec_from_json(ij.at("tau"));
    it.scale = ij.at("scale").get<double>();
    record.iterations.push_back(std::move(it));
  }
  return record;
}

std::string timings_to_json(const RunRecord& record) {
  json iters = json::array();
  for (const auto& it : record.iterations) {
    iters.push_back(
        json{{"t_gp", it.t_gp}, {"t_opt", it.t_opt}, {"t_eval", it.t_eval}});
  }
  json j{{"schema_version", kRecordSchemaVersion}, {"iterations", iters}};
  return j.dump(2) + "\n";
}

void timings_from_json(const std::string& json_text, RunRecord& record) {
  json j = json::parse(json_text);
  const auto& iters = j.at("iterations");
  if (iters.size() != record.iterations.size()) {
    throw std::runtime_error("timing sidecar does not match the record");
  }
  for (std::size_t i = 0; i < iters.size(); ++i) {
    record.iterations[i].t_gp =
        iters[i].at("t_gp").get<std::vector<double>>();
    record.iterations[i].t_opt = iters[i].at("t_opt").get<double>();
    record.iterations[i].t_eval = iters[i].at("t_eval").get<double>();
  }
}

void write_record(const std::string& path, const RunRecord& record) {
  write_file(path, record_to_json(record));
  write_file(path + ".timings.json", timings_to_json(record));
}

RunRecord read_record(const std::string& path) {
  RunRecord record = record_from_json(read_file(path));
  std::ifstream sidecar(path + ".timings.json");
  if (sidecar) {
    std::ostringstream ss;
    ss << sidecar.rdbuf();
    timings_from_json(ss.str(), record);
  }
  return record;
}

std::vector<AggregateRow> aggregate(const std::vector<RunRecord>& records) {
  if (records.empty()) throw std::invalid_argument("no records to aggregate");
  // sort by seed so the result is independent of input ordering
  std::vector<const RunRecord*> sorted;
  for (const auto& r : records) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(),
            [](const RunRecord* a, const RunRecord* b) {
              return a->config.seed < b->config.seed;
            });
  const RunRecord& head = *sorted.front();
  for (const RunRecord* r : sorted) {
    if (r->problem != head.problem ||
        r->config.variant != head.config.variant ||
        r->config.budget != head.config.budget) {
      throw std::invalid_argument(
          "mixed problem/variant/budget in one aggregation cell");
    }
  }
  const int n_iters = head.config.budget;
  const int R = static_cast<int>(sorted.size());
  std::vector<AggregateRow> rows;
  for (int it = 0; it < n_iters; ++it) {
    AggregateRow row;
    row.problem = head.problem;
    row.variant = variant_name(head.config.variant);
    row.iteration = it;
    std::vector<double> regrets;
    for (const RunRecord* r : sorted) {
      if (it >= static_cast<int>(r->iterations.size())) continue;  // aborted
      const auto& rec = r->iterations[it];
      if (std::isfinite(rec.incumbent)) {
        ++row.n_feasible;
        regrets.push_back(rec.log10_regret);
      }
    }
    row.masked = row.n_feasible < R;
    if (!row.masked) {
      double mean = 0.0;
      for (double v : regrets) mean += v;
      mean /= R;
      row.mean_log10_regret = mean;
      if (R > 1) {
        double ss = 0.0;
        for (double v : regrets) ss += (v - mean) * (v - mean);
        double sd = std::sqrt(ss / (R - 1));
        row.has_ci = true;
        row.ci_halfwidth = 1.96 * sd / std::sqrt(static_cast<double>(R));
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string aggregate_to_csv(const std::vector<AggregateRow>& rows,
                             const std::string& inputs_hash) {
  std::ostringstream out;
  out << "# schema_version=" << kRecordSchemaVersion << " inputs_sha1="
      << (inputs_hash.empty() ? "none" : inputs_hash) << "\n";
  out << "problem,variant,iteration,mean_log10_regret,ci_halfwidth,"
         "n_feasible\n";
  for (const auto& r : rows) {
    out << r.problem << ',' << r.variant << ',' << r.iteration << ',';
    out << (r.masked ? "null" : format_double(r.mean_log10_regret)) << ',';
    out << (r.masked || !r.has_ci ? "null" : format_double(r.ci_halfwidth));
    out << ',' << r.n_feasible << "\n";
  }
  return out.str();
}

std::vector<AggregateRow> aggregate_from_csv(const std::string& csv_text) {
  std::vector<AggregateRow> rows;
  std::istringstream in(csv_text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("problem,", 0) == 0) {
      continue;
    }
    std::istringstream ls(line);
    std::string field;
    AggregateRow row;
    std::getline(ls, row.problem, ',');
    std::getline(ls, row.variant, ',');
    std::getline(ls, field, ',');
    row.iteration = std::stoi(field);
    std::getline(ls, field, ',');
    if (field == "null") {
      row.masked = true;
    } else {
      row.mean_log10_regret = std::stod(field);
    }
    std::getline(ls, field, ',');
    if (field != "null") {
      row.has_ci = true;
      row.ci_halfwidth = std::stod(field);
    }
    std::getline(ls, field, ',');
    row.n_feasible = std::stoi(field);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string regret_curves_svg(const std::vector<AggregateRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("no rows to plot");
  const double width = 720, height = 480;
  const double ml = 70, mr = 20, mt = 20, mb = 50;
  double x_min = 1e300, x_max = -1e300, y_min = 1e300, y_max = -1e300;
  std::set<std::string> variants;
  for (const auto& r : rows) {
    variants.insert(r.variant);
    if (r.masked) continue;
    x_min = std::min(x_min, double(r.iteration));
    x_max = std::max(x_max, double(r.iteration));
    double lo = r.mean_log10_regret - (r.has_ci ? r.ci_halfwidth : 0.0);
    double hi = r.mean_log10_regret + (r.has_ci ? r.ci_halfwidth : 0.0);
    y_min = std::min(y_min, lo);
    y_max = std::max(y_max, hi);
  }
  if (x_max < x_min) throw std::invalid_argument("all rows are masked");
  if (x_max == x_min) x_max = x_min + 1;
  if (y_max == y_min) y_max = y_min + 1;
  auto px = [&](double it) {
    return ml + (it - x_min) / (x_max - x_min) * (width - ml - mr);
  };
  auto py = [&](double v) {
    return height - mb - (v - y_min) / (y_max - y_min) * (height - mt - mb);
  };
  const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                           "#ff7f0e", "#8c564b"};
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  // axes
  svg << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\""
      << width - mr << "\" y2=\"" << height - mb
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
      << "\" y2=\"" << height - mb << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << (ml + width - mr) / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\" font-size=\"14\">iteration</text>\n";
  svg << "<text x=\"18\" y=\"" << (mt + height - mb) / 2
      << "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 "
         "18 "
      << (mt + height - mb) / 2 << ")\">mean log10 regret</text>\n";
  auto label = [&](double v) { return format_double(v); };
  svg << "<text x=\"" << ml << "\" y=\"" << height - mb + 18
      << "\" font-size=\"12\" text-anchor=\"middle\">" << label(x_min)
      << "</text>\n";
  svg << "<text x=\"" << width - mr << "\" y=\"" << height - mb + 18
      << "\" font-size=\"12\" text-anchor=\"middle\">" << label(x_max)
      << "</text>\n";
  svg << "<text x=\"" << ml - 6 << "\" y=\"" << height - mb
      << "\" font-size=\"12\" text-anchor=\"end\">" << label(y_min)
      << "</text>\n";
  svg << "<text x=\"" << ml - 6 << "\" y=\"" << mt + 4
      << "\" font-size=\"12\" text-anchor=\"end\">" << label(y_max)
      << "</text>\n";
  int color = 0;
  for (const auto& variant : variants) {
    const char* stroke = palette[color % 6];
    std::ostringstream pts;
    for (const auto& r : rows) {
      if (r.variant != variant || r.masked) continue;
      pts << format_double(px(r.iteration)) << ','
          << format_double(py(r.mean_log10_regret)) << ' ';
      if (r.has_ci && r.ci_halfwidth > 0.0) {
        svg << "<line x1=\"" << format_double(px(r.iteration)) << "\" y1=\""
            << format_double(py(r.mean_log10_regret - r.ci_halfwidth))
            << "\" x2=\"" << format_double(px(r.iteration)) << "\" y2=\""
            << format_double(py(r.mean_log10_regret + r.ci_halfwidth))
            << "\" stroke=\"" << stroke << "\" stroke-width=\"1\"/>\n";
      }
    }
    svg << "<polyline fill=\"none\" stroke=\"" << stroke
        << "\" stroke-width=\"2\" points=\"" << pts.str() << "\"/>\n";
    svg << "<text x=\"" << width - mr - 10 << "\" y=\""
        << mt + 16 * (color + 1) << "\" font-size=\"13\" text-anchor=\"end\" "
        << "fill=\"" << stroke << "\">" << variant << "</text>\n";
    ++color;
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace cobalt
