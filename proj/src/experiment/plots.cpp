#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "ulab/error.hpp"
#include "ulab/experiment.hpp"
#include "ulab/metrics.hpp"

namespace ulab::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using metrics::format_metric;

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

class CsvFile {
 public:
  CsvFile(fs::path path, const char* header) : path_(std::move(path)), header_(header) {}
  void row(const std::string& line) { rows_ << line << '\n'; ++count_; }
  bool empty() const { return count_ == 0; }
  const fs::path& path() const { return path_; }
  void write() const {
    fs::create_directories(path_.parent_path());
    std::ofstream out(path_, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path_.string());
    out << header_ << '\n' << rows_.str();
    if (!out) throw IoError("write failed for " + path_.string());
  }

 private:
  fs::path path_;
  const char* header_;
  std::ostringstream rows_;
  std::size_t count_ = 0;
};

std::string cell_key(const RunRecord& r) { return format_metric(r.ratio) + "/" + std::to_string(r.seed_index); }

bool is_kind(const std::string& label, const char* name) {
  return label == name || label.rfind(std::string(name) + "-", 0) == 0;
}

}  // namespace

std::vector<fs::path> emit_plot_data(const ExperimentManifest& manifest) {
  const fs::path root = manifest.out_dir;
  const fs::path plots = root / "plots";
  fs::create_directories(plots / "curves");
  std::vector<std::string> gaps;
  std::vector<fs::path> written;
  if (!manifest.complete()) {
    gaps.push_back("manifest status is " + manifest.status + " (failed stage: " + manifest.failed_stage + ")");
  }

  std::map<std::string, const RunRecord*> retrain_by_cell;
  for (const auto& r : manifest.runs) {
    if (r.strategy == "retrain" && !retrain_by_cell.contains(cell_key(r))) retrain_by_cell[cell_key(r)] = &r;
  }

  CsvFile accel(plots / "acceleration.csv", kAccelerationHeader);
  CsvFile random_topk(plots / "random_topk.csv", kRandomTopkHeader);
  CsvFile degree(plots / "degree.csv", kDegreeHeader);
  std::set<std::string> cells_without_retrain;

  for (const auto& r : manifest.runs) {
    const std::string prefix = format_metric(r.ratio) + "," + std::to_string(r.seed) + "," + r.strategy;
    const fs::path outcome_path = root / r.outcome;
    if (r.outcome.empty() || !fs::exists(outcome_path)) {
      gaps.push_back("missing outcome for " + prefix);
      continue;
    }
    const json outcome = read_json(outcome_path);
    const json& acc = outcome.at("acc_trace");
    const json& loss = outcome.at("loss_trace");

    CsvFile curve(plots / "curves" / (format_metric(r.ratio) + "_" + std::to_string(r.seed_index) + "_" +
                                      r.strategy + ".csv"),
                  kCurveHeader);
    for (std::size_t e = 0; e < acc.size(); ++e) {
      const std::string epoch = std::to_string(e + 1);
      const double acc_re = acc[e].at("acc_re").get<double>();
      const double acc_ul = acc[e].at("acc_ul").get<double>();
      curve.row(epoch + "," + format_metric(acc_re) + "," + format_metric(acc_ul) + "," +
                format_metric(loss[e].at("ce").get<double>()) + "," + format_metric(loss[e].at("js").get<double>()));
      if (is_kind(r.strategy, "top-k") || is_kind(r.strategy, "random-k")) {
        random_topk.row(prefix + "," + epoch + "," + format_metric(acc_re) + "," + format_metric(acc_ul));
      }
    }
    curve.write();
    written.push_back(curve.path());

    auto it = retrain_by_cell.find(cell_key(r));
    if (it == retrain_by_cell.end()) {
      cells_without_retrain.insert(format_metric(r.ratio) + "," + std::to_string(r.seed));
    } else if (r.wall_time_s > 0.0) {
      const double t = it->second->wall_time_s;
      accel.row(prefix + "," + format_metric(r.wall_time_s) + "," + format_metric(t) + "," +
                format_metric(metrics::acceleration_ratio(t, r.wall_time_s)));
    } else {
      gaps.push_back("zero unlearn time for " + prefix + "; acceleration undefined");
    }

    if (!r.degree.empty()) {
      const fs::path dp = root / r.degree;
      if (!fs::exists(dp)) {
        gaps.push_back("missing degree report for " + prefix);
      } else {
        const json d = read_json(dp);
        degree.row(prefix + "," + format_metric(d.at("degree").get<double>()) + "," +
                   format_metric(d.at("acc_m_on_dp").get<double>()) + "," +
                   format_metric(d.at("acc_mul_on_dp").get<double>()) + "," +
                   (d.at("constraint_satisfied").get<bool>() ? "true" : "false"));
      }
    }
  }
  for (const auto& c : cells_without_retrain) gaps.push_back("no retrain run for ratio,seed " + c + "; acceleration omitted");

  auto emit = [&](const CsvFile& f, const std::string& missing) {
    if (f.empty()) {
      gaps.push_back(missing);
      std::error_code ec;
      fs::remove(f.path(), ec);
      return;
    }
    f.write();
    written.push_back(f.path());
  };
  emit(accel, "acceleration.csv not written: no run has a retrain reference");
  emit(random_topk, "random_topk.csv not written: no top-k or random-k runs");
  emit(degree, "degree.csv not written: no degree runs in manifest");

  const fs::path gaps_path = plots / "gaps.txt";
  std::ofstream g(gaps_path, std::ios::binary | std::ios::trunc);
  if (!g) throw IoError("cannot write " + gaps_path.string());
  for (const auto& line : gaps) g << line << '\n';
  written.push_back(gaps_path);
  return written;
}

}  // namespace ulab::experiment
