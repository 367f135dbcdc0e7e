#include "json.hpp"
#include "ulab/unlearn.hpp"

namespace ulab::unlearn {

std::string outcome_to_json(const UnlearnOutcome& o, bool include_timing) {
  using nlohmann::ordered_json;
  auto record = [](const EpochRecord& r) {
    return ordered_json{{"ce", r.ce}, {"js", r.js}, {"acc_re", r.acc_re}, {"acc_ul", r.acc_ul}};
  };
  ordered_json doc;
  doc["strategy"] = strategy_name(o.strategy);
  doc["K_or_k"] = o.k_or_K ? ordered_json(*o.k_or_K) : ordered_json(nullptr);
  doc["epsilon"] = o.epsilon;
  doc["lambda"] = o.lambda;
  doc["epochs_run"] = o.epochs_run;
  if (include_timing) doc["wall_time_s"] = o.wall_time_s;
  doc["perturbed_count"] = o.perturbed_count;
  ordered_json loss = ordered_json::array();
  ordered_json acc = ordered_json::array();
  for (const auto& r : o.trace) {
    loss.push_back({{"ce", r.ce}, {"js", r.js}});
    acc.push_back({{"acc_re", r.acc_re}, {"acc_ul", r.acc_ul}});
  }
  doc["loss_trace"] = std::move(loss);
  doc["acc_ul"] = o.acc_ul;
  doc["acc_re"] = o.acc_re;
  doc["acc_trace"] = std::move(acc);
  doc["initial"] = record(o.initial);
  doc["grad_norm_gap"] = o.grad_norm_gap ? ordered_json(*o.grad_norm_gap) : ordered_json(nullptr);
  doc["selected"] = o.selected;
  return doc.dump(2) + "\n";
}

}  // namespace ulab::unlearn
