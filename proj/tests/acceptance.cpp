// Acceptance run on the pinned blob fixture. Prints one PASS/FAIL line per
// criterion and exits non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "oracles.hpp"
#include "ulab/degree.hpp"
#include "ulab/error.hpp"
#include "ulab/experiment.hpp"
#include "ulab/metrics.hpp"
#include "ulab/propagate.hpp"
#include "ulab/unlearn.hpp"

using namespace ulab;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// One unlearning cell of the fixture sweep.
struct Cell {
  double ratio = 0.0;
  std::uint64_t seed = 0;
  double acc_ul_before = 0.0;
  double acc_re_before = 0.0;
  std::map<unlearn::Strategy, unlearn::UnlearnOutcome> runs;
  double ce_perturbed_topk = 0.0;
  double ce_perturbed_randomk = 0.0;
  double ce_random_init = 0.0;
};

struct Fixture {
  experiment::ExperimentConfig config = experiment::default_config();
  data::Dataset ds;
  std::map<std::uint64_t, nn::Network> sources;
  std::vector<Cell> cells;
  double seconds = 0.0;
};

double ce_on(const nn::Network& net, const data::Dataset& d) {
  return nn::cross_entropy(nn::forward(net, d.features), d.labels);
}

nn::Network apply_plan(const nn::Network& source, const unlearn::UnlearnOutcome& o, double epsilon) {
  unlearn::PerturbationPlan plan;
  plan.selected = o.selected;
  plan.epsilon = epsilon;
  nn::Network out = source;
  out.params() = unlearn::perturb(source.params(), plan);
  return out;
}

Fixture run_fixture() {
  const auto t0 = Clock::now();
  Fixture f;
  f.ds = experiment::load_dataset(f.config.dataset);
  for (std::uint64_t seed : f.config.seeds) f.sources.emplace(seed, experiment::train_source(f.config, f.ds, seed));
  for (double ratio : f.config.ratios) {
    for (std::uint64_t seed : f.config.seeds) {
      const nn::Network& source = f.sources.at(seed);
      const data::DatasetSplit split = experiment::split_for(f.ds, ratio, seed);
      const data::Dataset ul = data::subset(f.ds, split.unlearn_indices);
      const data::Dataset re = data::subset(f.ds, split.remain_indices);
      Cell c;
      c.ratio = ratio;
      c.seed = seed;
      c.acc_ul_before = metrics::accuracy(source, ul);
      c.acc_re_before = metrics::accuracy(source, re);
      for (auto kind : {unlearn::Strategy::top_k, unlearn::Strategy::random_k, unlearn::Strategy::retrain}) {
        const unlearn::UnlearnConfig u = experiment::strategy_config(f.config, {kind}, seed);
        c.runs.emplace(kind, unlearn::run_strategy(kind, source, f.ds, split, u));
      }
      const double eps = f.config.unlearn.epsilon;
      c.ce_perturbed_topk = ce_on(apply_plan(source, c.runs.at(unlearn::Strategy::top_k), eps), re);
      c.ce_perturbed_randomk = ce_on(apply_plan(source, c.runs.at(unlearn::Strategy::random_k), eps), re);
      c.ce_random_init = ce_on(nn::init_random(source.shape(), derive_seed(seed, 4)), re);
      f.cells.push_back(std::move(c));
    }
  }
  f.seconds = seconds_since(t0);
  return f;
}

// 1. Backward pass against central differences on small networks.
Verdict gradient_oracle() {
  const auto t0 = Clock::now();
  Verdict v;
  double worst = 0.0;
  std::size_t params = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    nn::NetworkShape shape;
    shape.input_dim = 3;
    shape.layers = {{5, nn::Activation::tanh}, {4, nn::Activation::leaky_relu}, {3, nn::Activation::identity}};
    const nn::Network net = nn::init_random(shape, seed);
    params = net.parameter_count();
    Rng rng(seed + 100);
    Matrix x(6, 3);
    for (double& e : x.data) e = rng.uniform(-1.5, 1.5);
    std::vector<int> y(6);
    for (int& l : y) l = static_cast<int>(rng.index(3));

    const auto grads = nn::backward(net, x, y).grads;
    const auto layers = testing::oracle_layers(shape);
    const auto xs = testing::rows(x);
    const auto fd = oracle::central_difference(
        [&](const std::vector<double>& w) { return oracle::loss(layers, w, xs, y); }, net.params().flatten(), 1e-5);
    // Relative error against a 1e-8 absolute floor.
    for (std::size_t i = 0; i < fd.size(); ++i) {
      worst = std::max(worst, std::abs(grads[i] - fd[i]) / std::max(std::abs(fd[i]), 1e-2));
    }
  }
  const double secs = seconds_since(t0);
  v.require(params <= 100, "network has " + std::to_string(params) + " parameters");
  v.require(worst <= 1e-6, "worst relative error " + fmt("%.3g", worst));
  v.require(secs < 10.0, "runtime " + fmt("%.2f", secs) + " s");
  if (v.pass) v.detail = std::to_string(params) + " params x 20 nets, worst rel err " + fmt("%.2e", worst) + ", " +
                         fmt("%.3f", secs) + " s";
  return v;
}

// 2. JS divergence identities.
Verdict js_suite() {
  Verdict v;
  const std::vector<double> one = {1.0, 0.0, 0.0};
  const std::vector<double> other = {0.0, 0.0, 1.0};
  v.require(unlearn::js_divergence(one, one) == 0.0, "JS(p,p) != 0 for one-hot");
  v.require(unlearn::js_divergence(one, other) == 1.0, "disjoint one-hot JS != 1");
  Rng rng(2024);
  double worst_asym = 0.0;
  double lo = 1.0, hi = 0.0;
  bool self_zero = true;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 2 + rng.index(11);
    std::vector<double> p(n), q(n);
    double sp = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sp += (p[i] = rng.uniform());
      sq += (q[i] = t % 4 == 0 && i == 0 ? 0.0 : rng.uniform());
    }
    for (auto& e : p) e /= sp;
    for (auto& e : q) e /= sq;
    const double pq = unlearn::js_divergence(p, q);
    worst_asym = std::max(worst_asym, std::abs(pq - unlearn::js_divergence(q, p)));
    lo = std::min(lo, pq);
    hi = std::max(hi, pq);
    self_zero = self_zero && unlearn::js_divergence(p, p) == 0.0;
  }
  v.require(self_zero, "JS(p,p) != 0 for a random p");
  v.require(worst_asym < 1e-12, "asymmetry " + fmt("%.3g", worst_asym));
  v.require(lo >= 0.0 && hi <= 1.0, "value outside [0,1]");
  if (v.pass) v.detail = "1000 pairs, max asymmetry " + fmt("%.2e", worst_asym) + ", range [" + fmt("%.4f", lo) + ", " +
                         fmt("%.4f", hi) + "]";
  return v;
}

// 3. Metric formulas.
Verdict metric_suite() {
  Verdict v;
  const double fr = metrics::forgetting_rate(1.0, 0.8001);
  const double acc = metrics::acceleration_ratio(1190.15, 76.97);
  const double mrr = metrics::memory_retention_rate(1.0, 0.9761);
  v.require(std::abs(fr - 0.1999) <= 0.0005, "FR " + fmt("%.6f", fr));
  v.require(std::abs(acc - 15.46) <= 0.01, "acceleration " + fmt("%.4f", acc));
  v.require(std::abs(mrr - 0.9761) <= 1e-12, "MRR " + fmt("%.6f", mrr));
  if (v.pass) v.detail = "FR " + fmt("%.4f", fr) + ", MRR " + fmt("%.4f", mrr) + ", acceleration " + fmt("%.4f", acc);
  return v;
}

// 4. Gradient-magnitude sensitivity versus brute-force loss change under a
// unit-direction perturbation of each parameter.
Verdict sensitivity_fidelity() {
  const auto t0 = Clock::now();
  Verdict v;
  const data::Dataset ds = testing::small_blobs();
  const std::size_t hidden[] = {8};
  nn::Network net = nn::init_random(nn::NetworkShape::mlp(4, hidden, 3), 6);
  unlearn::TrainConfig tc;
  tc.epochs = 30;
  tc.batch_size = 16;
  unlearn::train(net, ds, tc);

  const double mu = 1e-4;
  std::vector<double> rhos;
  for (std::size_t sample : {3, 47, 101}) {
    const data::Dataset one = data::subset(ds, std::vector<std::size_t>{sample});
    const auto sens = unlearn::sensitivity(net, one.features, one.labels, unlearn::SamplePolicy::single_sample);
    const auto layers = testing::oracle_layers(net.shape());
    const auto xs = testing::rows(one.features);
    const std::vector<double> w = net.params().flatten();
    const double base = oracle::loss(layers, w, xs, one.labels);
    std::vector<double> change(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
      std::vector<double> moved = w;
      moved[i] += mu;
      change[i] = std::abs(oracle::loss(layers, moved, xs, one.labels) - base);
    }
    rhos.push_back(oracle::spearman(sens.scores, change));
  }
  const double worst = *std::min_element(rhos.begin(), rhos.end());
  const double secs = seconds_since(t0);
  v.require(worst >= 0.8, "Spearman " + fmt("%.4f", worst));
  v.require(secs < 60.0, "runtime " + fmt("%.1f", secs) + " s");
  if (v.pass) v.detail = std::to_string(net.parameter_count()) + " params, 3 samples, min Spearman " +
                         fmt("%.4f", worst) + ", " + fmt("%.2f", secs) + " s";
  return v;
}

// 5. Parameters outside the plan keep the perturbed value exactly.
Verdict frozen_invariance(const Fixture& f) {
  Verdict v;
  std::size_t checked = 0;
  for (const Cell& c : f.cells) {
    const nn::Network& source = f.sources.at(c.seed);
    for (auto kind : {unlearn::Strategy::top_k, unlearn::Strategy::random_k}) {
      const auto& o = c.runs.at(kind);
      const nn::Network perturbed = apply_plan(source, o, f.config.unlearn.epsilon);
      for (std::size_t i = 0; i < perturbed.parameter_count(); ++i) {
        if (std::binary_search(o.selected.begin(), o.selected.end(), i)) continue;
        ++checked;
        if (o.model.params()[i] != perturbed.params()[i]) {
          v.require(false, std::string(unlearn::strategy_name(kind)) + " moved parameter " + std::to_string(i) +
                               " (ratio " + fmt("%g", c.ratio) + ", seed " + std::to_string(c.seed) + ")");
          break;
        }
      }
    }
  }
  if (v.pass) v.detail = std::to_string(f.cells.size() * 2) + " runs, " + std::to_string(checked) +
                         " frozen parameters bit-identical";
  return v;
}

// 6. Median accuracy movement per ratio for Top-K and Random-k.
Verdict directionality(const Fixture& f) {
  Verdict v;
  std::string table;
  for (double ratio : f.config.ratios) {
    for (auto kind : {unlearn::Strategy::top_k, unlearn::Strategy::random_k}) {
      std::vector<double> ul_before, ul_after, re_before, re_after;
      for (const Cell& c : f.cells) {
        if (c.ratio != ratio) continue;
        ul_before.push_back(c.acc_ul_before);
        re_before.push_back(c.acc_re_before);
        ul_after.push_back(c.runs.at(kind).acc_ul);
        re_after.push_back(c.runs.at(kind).acc_re);
      }
      const double ub = oracle::median(ul_before), ua = oracle::median(ul_after);
      const double rb = oracle::median(re_before), ra = oracle::median(re_after);
      const std::string name = std::string(unlearn::strategy_name(kind)) + "@" + fmt("%g", ratio);
      table += (table.empty() ? "" : " ") + name + " UL " + fmt("%.4f", ub) + "->" + fmt("%.4f", ua) + " RE " +
               fmt("%.4f", rb) + "->" + fmt("%.4f", ra) + ";";
      v.require(ua < ub, name + " median Acc_UL not reduced");
      v.require(ra >= 0.9 * rb, name + " median Acc_RE below 0.9x");
    }
  }
  v.require(f.seconds < 1800.0, "fixture run " + fmt("%.0f", f.seconds) + " s");
  v.detail = (v.pass ? "" : v.detail + " | ") + table + " fixture " + fmt("%.1f", f.seconds) + " s, " +
             std::to_string(f.config.seeds.size()) + " seeds";
  return v;
}

// 7. Top-K against retrain, per ratio.
Verdict speedup(const Fixture& f) {
  Verdict v;
  std::string summary;
  for (double ratio : f.config.ratios) {
    std::size_t good = 0, total = 0;
    double min_acc = 1e300;
    for (const Cell& c : f.cells) {
      if (c.ratio != ratio) continue;
      const auto& top = c.runs.at(unlearn::Strategy::top_k);
      const auto& re = c.runs.at(unlearn::Strategy::retrain);
      const double a = metrics::acceleration_ratio(re.wall_time_s, top.wall_time_s);
      min_acc = std::min(min_acc, a);
      ++total;
      if (a > 1.0 && top.epochs_run <= re.epochs_run) ++good;
    }
    summary += (summary.empty() ? "" : ", ") + fmt("%g", ratio) + ": " + std::to_string(good) + "/" +
               std::to_string(total) + " (min accel " + fmt("%.2f", min_acc) + "x)";
    v.require(good * 5 >= total * 4, "ratio " + fmt("%g", ratio) + " only " + std::to_string(good) + "/" +
                                         std::to_string(total) + " seeds");
  }
  v.detail = (v.pass ? "" : v.detail + " | ") + summary;
  return v;
}

// 8. Loss of the perturbed weights against a random initialisation on D_RE.
Verdict warm_start(const Fixture& f) {
  Verdict v;
  double worst_margin = 1e300;
  for (const Cell& c : f.cells) {
    for (double ce : {c.ce_perturbed_topk, c.ce_perturbed_randomk}) {
      worst_margin = std::min(worst_margin, c.ce_random_init - ce);
      if (!(ce <= c.ce_random_init)) {
        v.require(false, "ratio " + fmt("%g", c.ratio) + " seed " + std::to_string(c.seed) + ": CE " + fmt("%.4f", ce) +
                             " > " + fmt("%.4f", c.ce_random_init));
      }
    }
  }
  if (v.pass) v.detail = std::to_string(f.cells.size() * 2) + " runs, smallest margin " + fmt("%.4f", worst_margin) +
                         " nats";
  return v;
}

// 9. Unlearning degree on a fixture Top-K model with the default generator settings.
Verdict degree_sanity(const Fixture& f) {
  Verdict v;
  const Cell& c = f.cells.front();
  const nn::Network& source = f.sources.at(c.seed);
  const nn::Network& unlearned = c.runs.at(unlearn::Strategy::top_k).model;
  const data::DatasetSplit split = experiment::split_for(f.ds, c.ratio, c.seed);
  const data::Dataset ul = data::subset(f.ds, split.unlearn_indices);
  const data::Dataset re = data::subset(f.ds, split.remain_indices);

  degree::DegreeConfig dc = f.config.degree_config;
  dc.seed = c.seed;
  const degree::Generator probe(f.ds.dims(), dc.max_noise, dc.arch, 1);
  const auto self = degree::evaluate_degree(source, source, probe, ul, re, dc.tolerance);
  v.require(self.degree == 0.0, "degree(M,M) = " + fmt("%.6g", self.degree));

  const auto trained = degree::train_generator(source, unlearned, ul, dc);
  const auto r = degree::evaluate_degree(source, unlearned, trained.generator, ul, re, dc.tolerance);
  const Matrix dp = degree::perturb_data(trained.generator, ul.features, ul.scaling);
  double max_dev = 0.0;
  for (std::size_t i = 0; i < dp.data.size(); ++i) max_dev = std::max(max_dev, std::abs(dp.data[i] - ul.features.data[i]));
  const double upper = 1.0 - 1.0 / static_cast<double>(r.class_count);
  const bool range_ok = (r.degree >= 0.0 && r.degree <= upper) == r.in_expected_range;

  v.require(r.constraint_satisfied, "constraint violated: |" + fmt("%.4f", r.acc_m_on_dp) + " - " +
                                        fmt("%.4f", r.acc_m_on_dul) + "| > " + fmt("%g", dc.tolerance));
  v.require(r.degree > 0.0, "degree " + fmt("%.6g", r.degree) + " not > 0");
  v.require(range_ok, "range flag inconsistent");
  v.require(max_dev <= dc.max_noise, "noise " + fmt("%.6g", max_dev) + " exceeds " + fmt("%g", dc.max_noise));
  v.detail = (v.pass ? "" : v.detail + " | ") + "eta " + fmt("%g", dc.eta) + ", delta " + fmt("%g", dc.max_noise) +
             ", ratio " + fmt("%g", c.ratio) + ", seed " + std::to_string(c.seed) + ": degree " +
             fmt("%.4f", r.degree) + " (acc M on Dp " + fmt("%.4f", r.acc_m_on_dp) + ", M_UL on Dp " +
             fmt("%.4f", r.acc_mul_on_dp) + "), max |Dp-D_UL| " + fmt("%.4g", max_dev) +
             (r.in_expected_range ? "" : ", flagged out of range");
  return v;
}

std::map<std::string, std::string> outcome_files(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    const std::string name = e.path().filename().string();
    if (name.size() > 13 && name.ends_with(".outcome.json")) {
      std::ifstream in(e.path(), std::ios::binary);
      std::stringstream ss;
      ss << in.rdbuf();
      out[fs::relative(e.path(), root).string()] = ss.str();
    }
  }
  return out;
}

// 10. Two experiment runs of one config.
Verdict determinism() {
  Verdict v;
  experiment::ExperimentConfig c = experiment::default_config();
  c.ratios = {0.05, 0.2};
  c.seeds = {1, 2};
  c.strategies = {{unlearn::Strategy::top_k}, {unlearn::Strategy::random_k}, {unlearn::Strategy::mixed, 10},
                  {unlearn::Strategy::eu_k}, {unlearn::Strategy::cf_k}, {unlearn::Strategy::retrain}};
  const fs::path base = fs::temp_directory_path() / "ulab_acceptance_determinism";
  fs::remove_all(base);
  c.out_dir = (base / "a").string();
  const auto ma = experiment::run_experiment(c);
  c.out_dir = (base / "b").string();
  c.jobs = 2;
  const auto mb = experiment::run_experiment(c);
  v.require(ma.config_hash == mb.config_hash, "config hash differs");
  const auto a = outcome_files(base / "a");
  const auto b = outcome_files(base / "b");
  v.require(!a.empty() && a.size() == b.size(), "outcome counts " + std::to_string(a.size()) + " vs " +
                                                    std::to_string(b.size()));
  std::size_t same = 0;
  for (const auto& [path, text] : a) {
    auto it = b.find(path);
    if (it != b.end() && it->second == text) {
      ++same;
    } else {
      v.require(false, path + " differs");
    }
  }
  fs::remove_all(base);
  if (v.pass) v.detail = "hash " + ma.config_hash + ", " + std::to_string(same) +
                         " outcome JSONs byte-identical (second run with 2 jobs)";
  return v;
}

}  // namespace

int main() {
  std::vector<std::pair<std::string, std::function<Verdict()>>> criteria;
  criteria.emplace_back("gradient oracle", gradient_oracle);
  criteria.emplace_back("js divergence suite", js_suite);
  criteria.emplace_back("metric formulas", metric_suite);
  criteria.emplace_back("sensitivity fidelity", sensitivity_fidelity);

  std::printf("running fixture sweep...\n");
  std::fflush(stdout);
  Fixture fixture;
  std::string fixture_error;
  try {
    fixture = run_fixture();
  } catch (const std::exception& e) {
    fixture_error = e.what();
  }
  auto on_fixture = [&](Verdict (*fn)(const Fixture&)) {
    return [&, fn]() -> Verdict {
      if (!fixture_error.empty()) return Verdict{false, "fixture sweep failed: " + fixture_error};
      return fn(fixture);
    };
  };
  criteria.emplace_back("frozen-parameter invariance", on_fixture(frozen_invariance));
  criteria.emplace_back("unlearning directionality", on_fixture(directionality));
  criteria.emplace_back("speedup over retrain", on_fixture(speedup));
  criteria.emplace_back("warm start", on_fixture(warm_start));
  criteria.emplace_back("degree sanity", on_fixture(degree_sanity));
  criteria.emplace_back("determinism", determinism);

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = Verdict{false, std::string("exception: ") + e.what()};
    }
    failed += v.pass ? 0 : 1;
    std::printf("%s criterion %zu (%s): %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
