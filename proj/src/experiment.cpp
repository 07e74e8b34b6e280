#include "efpp/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>

#include <json.hpp>

namespace efpp {

namespace fs = std::filesystem;
using nlohmann::json;

const char* estimator_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::variance_t: return "variance_t";
    case EstimatorKind::variance_tprime: return "variance_tprime";
    case EstimatorKind::variance_tpp: return "variance_tpp";
    case EstimatorKind::variance_fn: return "variance_fn";
    case EstimatorKind::influence: return "influence";
    case EstimatorKind::derivative_sums: return "derivative_sums";
    case EstimatorKind::equality_rate: return "equality_rate";
    case EstimatorKind::tails: return "tails";
  }
  return "?";
}

std::optional<EstimatorKind> estimator_from_name(const std::string& name) {
  for (EstimatorKind k :
       {EstimatorKind::variance_t, EstimatorKind::variance_tprime, EstimatorKind::variance_tpp,
        EstimatorKind::variance_fn, EstimatorKind::influence, EstimatorKind::derivative_sums,
        EstimatorKind::equality_rate, EstimatorKind::tails}) {
    if (name == estimator_name(k)) return k;
  }
  return std::nullopt;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(trim(s.substr(start)));
      return out;
    }
    out.push_back(trim(s.substr(start, pos - start)));
    start = pos + 1;
  }
}

bool parse_double(const std::string& s, double& out) {
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end != nullptr && *end == '\0' && !s.empty();
}

bool parse_int(const std::string& s, long long& out) {
  char* end = nullptr;
  out = std::strtoll(s.c_str(), &end, 10);
  return end != nullptr && *end == '\0' && !s.empty();
}

}  // namespace

RunPlan parse_config_text(const std::string& text, std::vector<std::string>& errors) {
  RunPlan plan;
  plan.estimators = {EstimatorKind::variance_t, EstimatorKind::variance_tpp,
                     EstimatorKind::variance_fn, EstimatorKind::influence,
                     EstimatorKind::derivative_sums, EstimatorKind::equality_rate};
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      errors.push_back("line " + std::to_string(lineno) + ": expected key=value");
      continue;
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    auto bad = [&](const std::string& why) {
      errors.push_back("key '" + key + "': " + why);
    };
    long long iv = 0;
    double dv = 0.0;
    if (key == "dim") {
      if (parse_int(value, iv)) plan.config.dim = static_cast<int>(iv);
      else bad("expected an integer");
    } else if (key == "alpha") {
      if (parse_double(value, dv)) plan.config.alpha = dv;
      else bad("expected a real");
    } else if (key == "h0") {
      if (parse_double(value, dv)) plan.config.h0 = dv;
      else bad("expected a real");
    } else if (key == "h1") {
      if (parse_double(value, dv)) plan.config.h1 = dv;
      else bad("expected a real");
    } else if (key == "epsilon_k") {
      if (parse_int(value, iv)) plan.config.epsilon_k = static_cast<int>(iv);
      else bad("expected an integer");
    } else if (key == "n_values") {
      plan.config.n_values.clear();
      for (const std::string& item : split(value, ',')) {
        if (parse_double(item, dv)) plan.config.n_values.push_back(dv);
        else bad("expected a comma list of reals");
      }
    } else if (key == "replicates") {
      if (parse_int(value, iv)) plan.config.replicates = static_cast<int>(iv);
      else bad("expected an integer");
    } else if (key == "seed") {
      if (parse_int(value, iv)) plan.config.seed = MasterSeed{static_cast<std::uint64_t>(iv)};
      else bad("expected an integer");
    } else if (key == "workers") {
      if (parse_int(value, iv)) plan.config.workers = static_cast<int>(iv);
      else bad("expected an integer");
    } else if (key == "influence_band") {
      if (parse_double(value, dv)) plan.config.influence_band = dv;
      else bad("expected a real");
    } else if (key == "margin_scale") {
      if (parse_double(value, dv)) plan.config.margin_scale = dv;
      else bad("expected a real");
    } else if (key == "window_margin_x") {
      if (value == "auto") plan.config.window_margin_x = -1.0;
      else if (parse_double(value, dv)) plan.config.window_margin_x = dv;
      else bad("expected 'auto' or a real");
    } else if (key == "window_half_width") {
      if (value == "auto") plan.config.window_half_width = -1.0;
      else if (parse_double(value, dv)) plan.config.window_half_width = dv;
      else bad("expected 'auto' or a real");
    } else if (key == "tail_samples") {
      if (parse_int(value, iv)) plan.tail_samples = static_cast<int>(iv);
      else bad("expected an integer");
    } else if (key == "estimators") {
      plan.estimators.clear();
      for (const std::string& item : split(value, ',')) {
        if (auto k = estimator_from_name(item)) {
          plan.estimators.push_back(*k);
        } else {
          bad("unknown estimator '" + item + "'");
        }
      }
    } else {
      errors.push_back("unknown key '" + key + "'");
    }
  }
  for (const std::string& e : plan.config.validate()) errors.push_back(e);
  if (plan.estimators.empty()) errors.push_back("no estimators selected");
  const bool wants_tails =
      std::find(plan.estimators.begin(), plan.estimators.end(), EstimatorKind::tails) !=
      plan.estimators.end();
  if (wants_tails && plan.tail_samples < 1000) {
    errors.push_back("tail_samples must be at least 1000");
  }
  return plan;
}

RunPlan parse_config_file(const std::string& path, std::vector<std::string>& errors) {
  std::ifstream in(path);
  if (!in) {
    errors.push_back("cannot open config file: " + path);
    return {};
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), errors);
}

std::uint64_t config_hash(const RunPlan& plan) {
  std::ostringstream os;
  os << plan.config.dim << '|' << format_double(plan.config.alpha) << '|'
     << format_double(plan.config.h0) << '|' << format_double(plan.config.h1) << '|'
     << plan.config.epsilon_k << '|';
  for (double n : plan.config.n_values) os << format_double(n) << ',';
  os << '|' << plan.config.replicates << '|' << plan.config.seed.value << '|'
     << format_double(plan.config.influence_band) << '|'
     << format_double(plan.config.margin_scale) << '|'
     << format_double(plan.config.window_margin_x) << '|'
     << format_double(plan.config.window_half_width) << '|' << plan.tail_samples << '|';
  for (EstimatorKind k : plan.estimators) os << estimator_name(k) << ',';
  const std::string s = os.str();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

struct WorkItem {
  EstimatorKind estimator;
  double n;
  int replicate;
};

std::string item_key(const WorkItem& w) {
  return std::string(estimator_name(w.estimator)) + "|" + format_double(w.n) + "|" +
         std::to_string(w.replicate);
}

// Bit-reproducible reduction: samples keyed by replicate index, reduced in
// index order no matter which worker produced them.
void reduce_rows(const RunPlan& plan,
                 const std::map<std::string, std::vector<double>>& values,
                 std::vector<ResultRow>& rows) {
  const ExperimentConfig& config = plan.config;
  for (double n : config.n_values) {
    for (EstimatorKind kind : plan.estimators) {
      const int count = (kind == EstimatorKind::tails) ? plan.tail_samples : config.replicates;
      std::vector<std::vector<double>> samples(static_cast<std::size_t>(count));
      for (int r = 0; r < count; ++r) {
        const auto it = values.find(item_key({kind, n, r}));
        if (it == values.end()) {
          throw std::runtime_error("reduce: missing work item " + item_key({kind, n, r}));
        }
        samples[static_cast<std::size_t>(r)] = it->second;
      }
      auto scalars = [&] {
        std::vector<double> xs(static_cast<std::size_t>(count));
        for (int r = 0; r < count; ++r) xs[static_cast<std::size_t>(r)] = samples[static_cast<std::size_t>(r)][0];
        return xs;
      };
      switch (kind) {
        case EstimatorKind::variance_t:
        case EstimatorKind::variance_tprime:
        case EstimatorKind::variance_tpp:
        case EstimatorKind::variance_fn: {
          const std::vector<double> xs = scalars();
          const VarianceEstimate est = summarize_variance(xs);
          const std::string which = estimator_name(kind) + std::string("");
          const std::string target = which.substr(std::string("variance_").size());
          rows.push_back({n, "mean_" + target, est.mean, std::nullopt, est.count, ""});
          rows.push_back({n, "var_" + target, est.variance, est.stderr_variance, est.count, ""});
          break;
        }
        case EstimatorKind::influence: {
          const auto region = influence_region_boxes(config, n);
          std::vector<double> mean(region.size(), 0.0), sq(region.size(), 0.0);
          std::vector<double> rep_sums(static_cast<std::size_t>(count), 0.0);
          for (int r = 0; r < count; ++r) {
            const auto& row = samples[static_cast<std::size_t>(r)];
            if (row.size() != region.size()) {
              throw std::runtime_error("reduce: influence row width mismatch");
            }
            for (std::size_t b = 0; b < region.size(); ++b) {
              mean[b] += row[b];
              sq[b] += row[b] * row[b];
              rep_sums[static_cast<std::size_t>(r)] += row[b];
            }
          }
          double total = 0.0;
          std::size_t arg_max = 0;
          for (std::size_t b = 0; b < region.size(); ++b) {
            mean[b] /= count;
            total += mean[b];
            if (mean[b] > mean[arg_max]) arg_max = b;
          }
          double s1 = 0.0, s2 = 0.0;
          for (double v : rep_sums) {
            s1 += v;
            s2 += v * v;
          }
          const double sum_se =
              count >= 2
                  ? std::sqrt(std::max(0.0, (s2 - s1 * s1 / count) / (count - 1)) / count)
                  : 0.0;
          const double mx = mean[arg_max];
          const double var_b =
              count >= 2
                  ? std::max(0.0, (sq[arg_max] - count * mx * mx) / (count - 1))
                  : 0.0;
          rows.push_back({n, "influence_sum", total, sum_se, count, ""});
          rows.push_back({n, "influence_max", mx, std::sqrt(var_b / count), count, ""});
          break;
        }
        case EstimatorKind::derivative_sums: {
          double g1 = 0.0, g2 = 0.0, b1 = 0.0, b2 = 0.0;
          for (int r = 0; r < count; ++r) {
            const auto& pair = samples[static_cast<std::size_t>(r)];
            g1 += pair[0];
            g2 += pair[0] * pair[0];
            b1 += pair[1];
            b2 += pair[1] * pair[1];
          }
          const double gm = g1 / count, bm = b1 / count;
          const double gse = std::sqrt(std::max(0.0, (g2 - g1 * g1 / count) / (count - 1)) / count);
          const double bse = std::sqrt(std::max(0.0, (b2 - b1 * b1 / count) / (count - 1)) / count);
          rows.push_back({n, "gradient_sum", gm, gse, count, ""});
          rows.push_back({n, "bit_derivative_sum", bm, bse, count, ""});
          break;
        }
        case EstimatorKind::equality_rate: {
          const std::vector<double> xs = scalars();
          double acc = 0.0;
          for (double x : xs) acc += x;
          const double rate = acc / count;
          const double se = std::sqrt(std::max(0.0, rate * (1.0 - rate) / count));
          rows.push_back({n, "equality_rate", rate, se, count, ""});
          break;
        }
        case EstimatorKind::tails: {
          const std::vector<double> xs = scalars();
          const TailReport report = tail_fit(xs, n, config.dim, config.alpha, 0.0);
          rows.push_back({n, "tail_p999", report.p999, std::nullopt, count, ""});
          rows.push_back({n, "tail_kappa", report.kappa, std::nullopt, count, ""});
          for (std::size_t i = 0; i < report.survival_x.size(); ++i) {
            rows.push_back({n, "tail_survival", report.survival_x[i], std::nullopt, count,
                            "logp=" + format_double(report.survival_logp[i])});
          }
          break;
        }
      }
    }
  }
}

void write_csv(const std::string& path, const std::vector<ResultRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  out << "n,statistic,value,stderr,count,tags\n";
  for (const ResultRow& r : rows) {
    out << format_double(r.n) << ',' << r.statistic << ',' << format_double(r.value) << ',';
    if (r.se) out << format_double(*r.se);
    out << ',' << r.count << ',' << r.tags << '\n';
  }
}

void write_jsonl(const std::string& path, const std::vector<ResultRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  for (const ResultRow& r : rows) {
    json j{{"n", r.n}, {"statistic", r.statistic}, {"value", r.value},
           {"count", r.count}, {"tags", r.tags}};
    if (r.se) j["stderr"] = *r.se;
    else j["stderr"] = nullptr;
    out << j.dump() << '\n';
  }
}

}  // namespace

std::vector<ResultRow> read_result_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open results CSV: " + path);
  std::vector<ResultRow> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1) {
      if (line.rfind("n,statistic,value,stderr,count,tags", 0) != 0) {
        throw std::runtime_error("results CSV: unexpected header");
      }
      continue;
    }
    if (trim(line).empty()) continue;
    const auto parts = split(line, ',');
    if (parts.size() < 6) {
      throw std::runtime_error("results CSV: malformed row " + std::to_string(lineno));
    }
    ResultRow r;
    double dv = 0.0;
    long long iv = 0;
    if (!parse_double(parts[0], dv)) {
      throw std::runtime_error("results CSV: bad n in row " + std::to_string(lineno));
    }
    r.n = dv;
    r.statistic = parts[1];
    if (!parse_double(parts[2], dv)) {
      throw std::runtime_error("results CSV: bad value in row " + std::to_string(lineno));
    }
    r.value = dv;
    if (!parts[3].empty()) {
      if (!parse_double(parts[3], dv)) {
        throw std::runtime_error("results CSV: bad stderr in row " + std::to_string(lineno));
      }
      r.se = dv;
    }
    if (!parse_int(parts[4], iv)) {
      throw std::runtime_error("results CSV: bad count in row " + std::to_string(lineno));
    }
    r.count = static_cast<int>(iv);
    // Tags may contain commas from the split; rejoin.
    r.tags = parts[5];
    for (std::size_t i = 6; i < parts.size(); ++i) r.tags += "," + parts[i];
    rows.push_back(std::move(r));
  }
  return rows;
}

RunOutcome run_experiment(const RunOptions& options) {
  RunOutcome outcome;
  RunPlan plan = parse_config_file(options.config_path, outcome.errors);
  if (!outcome.errors.empty()) return outcome;
  if (options.seed_override) plan.config.seed = MasterSeed{*options.seed_override};
  if (options.workers_override >= 0) plan.config.workers = options.workers_override;

  const std::uint64_t hash = config_hash(plan);
  fs::create_directories(options.out_dir);
  const std::string partial_path = options.out_dir + "/partial.jsonl";
  outcome.csv_path = options.out_dir + "/results.csv";
  outcome.jsonl_path = options.out_dir + "/results.jsonl";
  outcome.manifest_path = options.out_dir + "/manifest.json";

  // Completed items from an earlier interrupted run.
  std::map<std::string, std::vector<double>> values;
  if (options.resume && fs::exists(partial_path)) {
    std::ifstream in(partial_path);
    std::string line;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      const json j = json::parse(line, nullptr, false);
      if (j.is_discarded()) continue;  // torn tail line from an interrupt
      if (j.value("config_hash_u64", std::uint64_t{0}) != hash) {
        outcome.errors.push_back("resume: partial log belongs to a different config");
        return outcome;
      }
      WorkItem w;
      const auto kind = estimator_from_name(j.at("estimator").get<std::string>());
      if (!kind) continue;
      w.estimator = *kind;
      w.n = j.at("n").get<double>();
      w.replicate = j.at("replicate").get<int>();
      values[item_key(w)] = j.at("values").get<std::vector<double>>();
    }
  } else if (!options.resume && fs::exists(partial_path)) {
    fs::remove(partial_path);
  }

  // Work plan; regions are fixed per (estimator, n).
  std::vector<WorkItem> pending;
  std::map<std::string, std::vector<BoxIndex>> regions;
  for (double n : plan.config.n_values) {
    for (EstimatorKind kind : plan.estimators) {
      const int count = (kind == EstimatorKind::tails) ? plan.tail_samples
                                                       : plan.config.replicates;
      if (kind == EstimatorKind::influence) {
        regions[format_double(n)] = influence_region_boxes(plan.config, n);
      }
      for (int r = 0; r < count; ++r) {
        const WorkItem w{kind, n, r};
        if (!values.count(item_key(w))) pending.push_back(w);
      }
    }
  }

  int budget = options.max_work_items >= 0 ? options.max_work_items
                                           : static_cast<int>(pending.size());
  const int to_run = std::min<int>(budget, static_cast<int>(pending.size()));
  const bool interrupted = to_run < static_cast<int>(pending.size());

  std::ofstream partial_out(partial_path, std::ios::app | std::ios::binary);
  std::mutex out_mu;
  std::mutex values_mu;
  parallel_for(to_run, plan.config.workers, [&](int idx) {
    const WorkItem w = pending[static_cast<std::size_t>(idx)];
    std::vector<double> vals;
    switch (w.estimator) {
      case EstimatorKind::variance_t:
        vals = {variance_replicate_value(plan.config, VarTarget::T, w.n, w.replicate)};
        break;
      case EstimatorKind::variance_tprime:
        vals = {variance_replicate_value(plan.config, VarTarget::T_PRIME, w.n, w.replicate)};
        break;
      case EstimatorKind::variance_tpp:
        vals = {variance_replicate_value(plan.config, VarTarget::T_PP, w.n, w.replicate)};
        break;
      case EstimatorKind::variance_fn:
        vals = {variance_replicate_value(plan.config, VarTarget::F_N, w.n, w.replicate)};
        break;
      case EstimatorKind::influence:
        vals = influence_replicate_row(plan.config, w.n, w.replicate,
                                       regions.at(format_double(w.n)));
        break;
      case EstimatorKind::derivative_sums: {
        const auto [g, b] = derivative_sums_replicate(plan.config, w.n, w.replicate);
        vals = {g, b};
        break;
      }
      case EstimatorKind::equality_rate:
        vals = {equality_replicate(plan.config, w.n, w.replicate) ? 1.0 : 0.0};
        break;
      case EstimatorKind::tails:
        vals = {tpp_replicate_value(plan.config, w.n, w.replicate)};
        break;
    }
    json j{{"estimator", estimator_name(w.estimator)},
           {"n", w.n},
           {"replicate", w.replicate},
           {"config_hash_u64", hash},
           {"values", vals}};
    {
      std::lock_guard<std::mutex> lock(out_mu);
      partial_out << j.dump() << '\n';
      partial_out.flush();
    }
    {
      std::lock_guard<std::mutex> lock(values_mu);
      values[item_key(w)] = std::move(vals);
    }
  });
  partial_out.close();

  json manifest{{"code_version", kCodeVersion},
                {"config_hash_u64", hash},
                {"seed", plan.config.seed.value},
                {"replicates", plan.config.replicates},
                {"n_values", plan.config.n_values},
                {"workers", plan.config.workers},
                {"completed_items", values.size()},
                {"status", interrupted ? "partial" : "complete"},
                {"outputs", json::array({outcome.csv_path, outcome.jsonl_path})}};
  {
    json est = json::array();
    for (EstimatorKind k : plan.estimators) est.push_back(estimator_name(k));
    manifest["estimators"] = est;
  }

  if (interrupted) {
    std::ofstream mout(outcome.manifest_path, std::ios::binary);
    mout << manifest.dump(2) << '\n';
    outcome.partial = true;
    outcome.ok = true;
    return outcome;
  }

  reduce_rows(plan, values, outcome.rows);
  write_csv(outcome.csv_path, outcome.rows);
  write_jsonl(outcome.jsonl_path, outcome.rows);
  {
    std::ofstream mout(outcome.manifest_path, std::ios::binary);
    mout << manifest.dump(2) << '\n';
  }
  fs::remove(partial_path);
  outcome.ok = true;
  return outcome;
}

}  // namespace efpp
