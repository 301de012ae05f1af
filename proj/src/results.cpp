#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fmala/harness.hpp"

#ifndef FMALA_VERSION
#define FMALA_VERSION "0.0.0"
#endif

namespace fmala {
namespace {

namespace fs = std::filesystem;

std::string num(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + "\"";
}

std::string file_stem(const std::string& s) {
  std::string out;
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_';
    out.push_back(ok ? c : '_');
  }
  return out;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw OutputError("cannot open '" + path.string() + "' for writing");
  out << content;
  out.flush();
  if (!out) throw OutputError("failed writing '" + path.string() + "'");
}

std::string summary_cell(const std::vector<double>& values) {
  if (values.size() == 1) return num("%.3f", values.front());
  return format_mean_std(mean_std(values));
}

double trace_or_nan(const KernelSnapshot& s) {
  return s.preconditioner ? s.preconditioner->trace() : std::nan("");
}

std::string iso_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

void emit_results(const ExperimentResult& result, const std::string& dir) {
  const fs::path root(dir);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec || !fs::is_directory(root)) {
    throw OutputError("cannot create output directory '" + dir + "'" +
                      (ec ? ": " + ec.message() : std::string()));
  }
  const std::string target = csv_field(result.target_name);

  std::ostringstream ess_csv;
  ess_csv << "sampler,target,replicate,max_ess,median_ess,min_ess\n";
  std::ostringstream summary;
  summary << "sampler,target,replicates,max_ess,median_ess,min_ess,note\n";
  std::ostringstream trace;
  trace << "sampler,replicate,iteration,"
        << (result.has_reference_covariance ? "frobenius_norm," : "")
        << "log_target,running_acceptance\n";
  std::ostringstream params;
  params << "sampler,replicate,sigma2_at_freeze,sigma2_at_end,preconditioner_trace_at_freeze,"
            "preconditioner_trace_at_end,unchanged\n";

  for (const auto& s : result.samplers) {
    const std::string name = csv_field(s.display_name);
    if (!s.reproduced) {
      summary << name << ',' << target << ",0,not-reproduced,not-reproduced,not-reproduced,"
              << csv_field(s.note) << '\n';
      continue;
    }
    std::vector<double> mx, md, mn;
    for (const auto& r : s.replicates) {
      ess_csv << name << ',' << target << ',' << r.replicate << ',' << num("%.6f", r.ess.max) << ','
              << num("%.6f", r.ess.median) << ',' << num("%.6f", r.ess.min) << '\n';
      mx.push_back(r.ess.max);
      md.push_back(r.ess.median);
      mn.push_back(r.ess.min);
      for (std::size_t i = 0; i < r.trace.size(); ++i) {
        trace << name << ',' << r.replicate << ',' << r.trace.iteration[i] << ',';
        if (r.trace.has_frobenius()) trace << num("%.10g", r.trace.frobenius_norm[i]) << ',';
        trace << num("%.10g", r.trace.log_target[i]) << ','
              << num("%.6f", r.trace.running_acceptance[i]) << '\n';
      }
      params << name << ',' << r.replicate << ',' << num("%.17g", r.at_freeze.sigma2) << ','
             << num("%.17g", r.at_end.sigma2) << ',' << num("%.17g", trace_or_nan(r.at_freeze))
             << ',' << num("%.17g", trace_or_nan(r.at_end)) << ','
             << (r.at_freeze == r.at_end ? "true" : "false") << '\n';
    }
    summary << name << ',' << target << ',' << s.replicates.size() << ',' << summary_cell(mx)
            << ',' << summary_cell(md) << ',' << summary_cell(mn) << ",\n";
  }
  write_file(root / "ess.csv", ess_csv.str());
  write_file(root / "ess_summary.csv", summary.str());
  write_file(root / "trace.csv", trace.str());
  write_file(root / "parameters.csv", params.str());

  if (result.config.save_chains) {
    const fs::path chains = root / "chains";
    fs::create_directories(chains, ec);
    if (ec) throw OutputError("cannot create '" + chains.string() + "': " + ec.message());
    for (const auto& s : result.samplers) {
      for (const auto& r : s.replicates) {
        std::ostringstream out;
        for (Index j = 0; j < r.samples.cols(); ++j) out << (j ? "," : "") << 'x' << j;
        out << '\n';
        for (Index i = 0; i < r.samples.rows(); ++i) {
          for (Index j = 0; j < r.samples.cols(); ++j) {
            out << (j ? "," : "") << num("%.17g", r.samples(i, j));
          }
          out << '\n';
        }
        write_file(chains / (file_stem(s.display_name) + "_" + std::to_string(r.replicate) +
                             ".csv"),
                   out.str());
      }
    }
  }

  nlohmann::json seeds = nlohmann::json::array();
  for (int r = 0; r < result.config.replicates; ++r) {
    seeds.push_back({{"replicate", r}, {"base_seed", result.config.base_seed}, {"stream", r}});
  }
  nlohmann::json notes = nlohmann::json::object();
  for (const auto& s : result.samplers) {
    if (!s.reproduced) notes[s.display_name] = s.note;
  }
  const nlohmann::json run = {
      {"config", to_json(result.config)},
      {"metadata",
       {{"timestamp", iso_timestamp()},
        {"version", FMALA_VERSION},
        {"eigen",
         std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
             std::to_string(EIGEN_MINOR_VERSION)},
        {"compiler", __VERSION__},
        {"target", result.target_name},
        {"seeds", seeds},
        {"not_reproduced", notes}}}};
  write_file(root / "run.json", run.dump(2) + "\n");
}

}  // namespace fmala
