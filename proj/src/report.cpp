#include "capgate/report.hpp"

#include <ostream>

#include "capgate/data_io.hpp"

namespace capgate {

namespace {

constexpr const char* kSummaryFields[] = {"ci_low", "ci_high", "mean", "std"};

std::string csv_field(const nlohmann::ordered_json& v) {
  if (v.is_null()) return "";
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_float()) return format_double(v.get<double>());
  if (v.is_number()) return v.dump();
  const auto s = v.get<std::string>();
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  return out + "\"";
}

}  // namespace

const std::vector<std::string>& sweep_columns() {
  static const std::vector<std::string> columns = [] {
    std::vector<std::string> c{"dataset",  "scorer",         "alpha",     "beta",
                               "gamma",    "capacity",       "tau_free",  "tau_capacity",
                               "tau_star", "constraint_active", "recall", "fpr",
                               "disparity", "intervention_rate", "loss"};
    for (const char* metric : kBootstrapMetrics) {
      for (const char* field : kSummaryFields) c.push_back(std::string(metric) + "_" + field);
    }
    c.insert(c.end(), {"n_boot", "critical_capacity", "capacity_infeasible"});
    return c;
  }();
  return columns;
}

nlohmann::ordered_json to_json(const SweepRecord& r) {
  nlohmann::ordered_json j;
  j["dataset"] = r.dataset;
  j["scorer"] = r.scorer;
  j["alpha"] = r.alpha;
  j["beta"] = r.beta;
  j["gamma"] = r.gamma;
  j["capacity"] = r.capacity;
  j["tau_free"] = r.tau_free;
  j["tau_capacity"] = r.tau_capacity;
  j["tau_star"] = r.tau_star;
  j["constraint_active"] = r.constraint_active;
  j["recall"] = r.recall;
  j["fpr"] = r.fpr;
  j["disparity"] = r.disparity;
  j["intervention_rate"] = r.intervention_rate;
  j["loss"] = r.loss;
  std::size_t n_boot = 0;
  for (const char* metric : kBootstrapMetrics) {
    auto it = r.bootstrap.find(metric);
    const std::string m(metric);
    if (it == r.bootstrap.end()) {
      for (const char* field : kSummaryFields) j[m + "_" + field] = nullptr;
      continue;
    }
    j[m + "_ci_low"] = it->second.ci_low;
    j[m + "_ci_high"] = it->second.ci_high;
    j[m + "_mean"] = it->second.mean;
    j[m + "_std"] = it->second.std;
    n_boot = it->second.n_resamples;
  }
  j["n_boot"] = n_boot;
  j["critical_capacity"] = r.critical_capacity;
  j["capacity_infeasible"] = r.capacity_infeasible;
  return j;
}

nlohmann::ordered_json to_json(std::span<const SweepRecord> records) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : records) arr.push_back(to_json(r));
  return arr;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRecord> records) {
  const auto& cols = sweep_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& r : records) {
    const auto j = to_json(r);
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << csv_field(j.at(cols[i]));
    out << '\n';
  }
}

nlohmann::ordered_json to_json(const ThresholdDecision& d) {
  nlohmann::ordered_json j;
  j["tau_free"] = d.tau_free;
  j["tau_capacity"] = d.tau_capacity;
  j["tau_star"] = d.tau_star;
  j["constraint_active"] = d.constraint_active;
  j["critical_capacity"] = d.critical_capacity;
  j["loss_at_tau_star"] = d.loss_at_tau_star;
  j["capacity_infeasible"] = d.capacity_infeasible;
  return j;
}

nlohmann::ordered_json to_json(const PolicyOutcome& o) {
  nlohmann::ordered_json j;
  j["policy"] = std::string(to_string(o.policy));
  if (o.tau) {
    j["tau"] = *o.tau;
  } else {
    j["tau"] = "randomized";
  }
  j["recall"] = o.confusion.recall;
  j["fnr"] = o.confusion.fnr;
  j["fpr"] = o.confusion.fpr;
  j["disparity"] = o.disparity.delta;
  j["intervention_rate"] = o.intervention_rate;
  j["feasible"] = o.feasible;
  j["loss"] = o.loss;
  j["capacity_infeasible"] = o.capacity_infeasible;
  j["tp"] = o.confusion.tp;
  j["fp"] = o.confusion.fp;
  j["fn"] = o.confusion.fn;
  j["tn"] = o.confusion.tn;
  auto groups = nlohmann::ordered_json::array();
  for (const auto& g : o.disparity.per_group_tpr) {
    nlohmann::ordered_json e;
    e["group"] = g.group;
    if (g.tpr) {
      e["tpr"] = *g.tpr;
    } else {
      e["tpr"] = nullptr;
    }
    groups.push_back(std::move(e));
  }
  j["per_group_tpr"] = std::move(groups);
  return j;
}

nlohmann::ordered_json to_json(const BootstrapSummary& s) {
  nlohmann::ordered_json j;
  j["metric"] = s.metric;
  j["mean"] = s.mean;
  j["std"] = s.std;
  j["ci_low"] = s.ci_low;
  j["ci_high"] = s.ci_high;
  j["n_resamples"] = s.n_resamples;
  return j;
}

}  // namespace capgate
