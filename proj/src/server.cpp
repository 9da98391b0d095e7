#include "capgate/server.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "httplib.h"

#include "capgate/data_io.hpp"
#include "capgate/evaluation.hpp"
#include "capgate/metrics.hpp"
#include "capgate/policies.hpp"
#include "capgate/report.hpp"

namespace capgate {

namespace {

using Json = nlohmann::json;
using OJson = nlohmann::ordered_json;

struct FieldError {
  std::string field;
  std::string message;
};

ApiResponse error_response(int status, const std::string& message, const std::string& field = {}) {
  OJson body;
  body["error"] = message;
  if (!field.empty()) body["field"] = field;
  return {status, std::move(body)};
}

const Json& require(const Json& req, const char* field) {
  if (!req.is_object() || !req.contains(field)) throw FieldError{field, std::string("missing field '") + field + "'"};
  return req.at(field);
}

double number_field(const Json& req, const char* field) {
  const auto& v = require(req, field);
  if (!v.is_number()) throw FieldError{field, std::string("'") + field + "' must be a number"};
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw FieldError{field, std::string("'") + field + "' must be finite"};
  return d;
}

double weight_field(const Json& req, const char* field) {
  const double d = number_field(req, field);
  if (d < 0.0) throw FieldError{field, std::string("'") + field + "' must be nonnegative"};
  return d;
}

double capacity_value(const Json& v, const char* field) {
  if (!v.is_number() || !(v.get<double>() > 0.0 && v.get<double>() <= 1.0)) {
    throw FieldError{field, "capacity must be in (0,1]"};
  }
  return v.get<double>();
}

bool bool_field(const Json& req, const char* field, bool fallback) {
  if (!req.contains(field)) return fallback;
  const auto& v = req.at(field);
  if (!v.is_boolean()) throw FieldError{field, std::string("'") + field + "' must be a boolean"};
  return v.get<bool>();
}

std::vector<double> number_list(const Json& req, const char* field, const std::vector<double>& fallback,
                                bool nonnegative) {
  if (!req.contains(field)) return fallback;
  const auto& v = req.at(field);
  std::vector<double> out;
  auto push = [&](const Json& e) {
    if (!e.is_number() || !std::isfinite(e.get<double>()) || (nonnegative && e.get<double>() < 0.0)) {
      throw FieldError{field, std::string("'") + field + "' must hold nonnegative numbers"};
    }
    out.push_back(e.get<double>());
  };
  if (v.is_array()) {
    for (const auto& e : v) push(e);
  } else {
    push(v);
  }
  if (out.empty()) throw FieldError{field, std::string("'") + field + "' must be non-empty"};
  return out;
}

std::uint64_t unsigned_field(const Json& req, const char* field) {
  const auto& v = req.at(field);
  if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    throw FieldError{field, std::string(field) + " must be a nonnegative integer"};
  }
  return v.get<std::uint64_t>();
}

// Rows arrive either columnar ({score: [...], label: [...], group: [...]})
// or as an array of {score, label, group} objects.
Json columnar(const Json& rows) {
  if (!rows.is_array()) return rows;
  Json out{{"score", Json::array()}, {"label", Json::array()}, {"group", Json::array()}};
  for (const auto& r : rows) {
    if (!r.is_object()) throw FieldError{"rows", "each row must be an object"};
    for (const char* k : {"score", "label", "group"}) out[k].push_back(require(r, k));
  }
  return out;
}

ScoredDataset rows_from_json(const Json& input) {
  const auto rows = columnar(input);
  const auto& s = require(rows, "score");
  const auto& l = require(rows, "label");
  const auto& g = require(rows, "group");
  if (!s.is_array() || !l.is_array() || !g.is_array()) throw FieldError{"rows", "rows must hold score, label and group arrays"};
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
  std::vector<std::string> groups;
  for (const auto& v : s) {
    if (!v.is_number()) throw FieldError{"rows.score", "scores must be numbers"};
    scores.push_back(v.get<double>());
  }
  for (const auto& v : l) {
    if (!v.is_number_integer() || (v.get<int>() != 0 && v.get<int>() != 1)) {
      throw FieldError{"rows.label", "labels must be 0 or 1"};
    }
    labels.push_back(static_cast<std::uint8_t>(v.get<int>()));
  }
  for (const auto& v : g) groups.push_back(v.is_string() ? v.get<std::string>() : v.dump());
  return ScoredDataset(std::move(scores), std::move(labels), groups);
}

OJson downsample_curve(const LossCurve& c, std::size_t max_points) {
  std::vector<std::size_t> idx;
  if (c.size() <= max_points) {
    for (std::size_t i = 0; i < c.size(); ++i) idx.push_back(i);
  } else {
    for (std::size_t k = 0; k < max_points; ++k) {
      idx.push_back(static_cast<std::size_t>(std::llround(static_cast<double>(k) * static_cast<double>(c.size() - 1) /
                                                          static_cast<double>(max_points - 1))));
    }
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  }
  OJson out;
  auto column = [&](const std::vector<double>& v) {
    auto arr = OJson::array();
    for (auto i : idx) arr.push_back(v[i]);
    return arr;
  };
  out["tau"] = column(c.taus);
  out["loss"] = column(c.losses);
  out["fnr"] = column(c.fnrs);
  out["fpr"] = column(c.fprs);
  out["disparity"] = column(c.deltas);
  out["intervention_rate"] = column(c.intervention_rates);
  return out;
}

}  // namespace

ScenarioService::ScenarioService(ServiceConfig config) : config_(std::move(config)) {}

void ScenarioService::register_dataset(const std::string& id, ScoredDataset full, ScoredDataset validation,
                                       ScoredDataset test) {
  if (id.empty()) throw Error(ErrorKind::InvalidArgument, "dataset_id must be non-empty");
  auto grid = default_grid(validation, config_.grid_step);
  auto curve = loss_curve(validation, grid, EthicalWeights{});
  auto entry = std::make_shared<const RegisteredDataset>(RegisteredDataset{
      id, std::move(full), std::move(validation), std::move(test), std::move(grid), std::move(curve)});
  std::unique_lock lock(mutex_);
  if (!datasets_.emplace(id, std::move(entry)).second) {
    throw Error(ErrorKind::InvalidArgument, "dataset '" + id + "' is already registered");
  }
}

void ScenarioService::register_split(const std::string& id, const ScoredDataset& full, std::uint64_t split_seed) {
  auto split = stratified_split(full, kDefaultSplitFractions, split_seed);
  register_dataset(id, full, std::move(split.validation), std::move(split.test));
}

std::shared_ptr<const RegisteredDataset> ScenarioService::find(const std::string& id) const {
  std::shared_lock lock(mutex_);
  auto it = datasets_.find(id);
  return it == datasets_.end() ? nullptr : it->second;
}

OJson dataset_summary(const RegisteredDataset& d) {
  OJson j;
  j["dataset_id"] = d.id;
  j["N"] = d.full.size();
  j["base_rate"] = static_cast<double>(d.full.positives()) / static_cast<double>(d.full.size());
  auto groups = OJson::array();
  for (std::size_t g = 0; g < d.full.num_groups(); ++g) {
    groups.push_back({{"group", d.full.group_names()[g]}, {"size", d.full.group_sizes()[g]}});
  }
  j["groups"] = std::move(groups);
  j["validation_size"] = d.validation.size();
  j["test_size"] = d.test.size();
  return j;
}

ApiResponse ScenarioService::list_datasets() const {
  std::shared_lock lock(mutex_);
  auto arr = OJson::array();
  for (const auto& [id, d] : datasets_) arr.push_back(dataset_summary(*d));
  return {200, std::move(arr)};
}

ApiResponse ScenarioService::add_dataset(const Json& req) {
  try {
    const auto& id_field = require(req, "dataset_id");
    if (!id_field.is_string()) throw FieldError{"dataset_id", "dataset_id must be a string"};
    const auto id = id_field.get<std::string>();
    if (find(id)) return error_response(409, "dataset '" + id + "' is already registered", "dataset_id");

    std::optional<ScoredDataset> full;
    if (req.contains("path")) {
      full = load_csv(req.at("path").get<std::string>());
    } else {
      full = rows_from_json(require(req, "rows"));
    }
    if (bool_field(req, "split", true)) {
      std::uint64_t seed = kDefaultSplitSeed;
      if (req.contains("seed")) {
        seed = unsigned_field(req, "seed");
      }
      register_split(id, *full, seed);
    } else {
      register_dataset(id, *full, *full, *full);
    }
    return {201, dataset_summary(*find(id))};
  } catch (const FieldError& e) {
    return error_response(400, e.message, e.field);
  } catch (const Json::exception& e) {
    return error_response(400, e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::NotFound) return error_response(404, e.what(), "path");
    return error_response(400, e.what());
  }
}

ApiResponse ScenarioService::evaluate(const Json& req) const {
  try {
    const auto& id_field = require(req, "dataset_id");
    if (!id_field.is_string()) throw FieldError{"dataset_id", "dataset_id must be a string"};
    const EthicalWeights weights{weight_field(req, "alpha"), weight_field(req, "beta"), weight_field(req, "gamma")};
    const Capacity capacity(capacity_value(require(req, "capacity"), "capacity"));
    const bool with_baselines = bool_field(req, "include_baselines", false);
    const bool with_curve = bool_field(req, "include_curve", false);

    const auto ds = find(id_field.get<std::string>());
    if (!ds) return error_response(404, "unknown dataset_id '" + id_field.get<std::string>() + "'", "dataset_id");

    const auto curve = reweight(ds->metric_curve, weights);
    const auto decision = deploy(curve, ds->validation, ds->grid, capacity);

    PolicyOutcome proposed;
    proposed.policy = PolicyId::ProposedFramework;
    proposed.tau = decision.tau_star;
    proposed.confusion = confusion(ds->test, decision.tau_star);
    proposed.disparity = disparity(ds->test, decision.tau_star);
    proposed.intervention_rate = proposed.confusion.intervention_rate;
    proposed.feasible = proposed.intervention_rate <= capacity.value() + kFeasibilitySlack;
    proposed.loss = combine_loss(weights, proposed.confusion.fnr, proposed.confusion.fpr, proposed.disparity.delta);
    proposed.capacity_infeasible = decision.capacity_infeasible;

    OJson body;
    body["dataset_id"] = ds->id;
    body["alpha"] = weights.alpha;
    body["beta"] = weights.beta;
    body["gamma"] = weights.gamma;
    body["capacity"] = capacity.value();
    const auto decision_fields = to_json(decision);
    for (const auto& [k, v] : decision_fields.items()) body[k] = v;
    body["calibration_intervention_rate"] =
        static_cast<double>(ds->validation.count_at_or_above(decision.tau_star)) /
        static_cast<double>(ds->validation.size());
    body["outcome"] = to_json(proposed);
    if (with_baselines) {
      PolicyParams params;
      params.seed = config_.master_seed;
      auto rows = OJson::array();
      for (const auto& r : evaluate_all_policies(params, ds->validation, ds->test, ds->grid, weights, capacity)) {
        if (r.outcome) {
          rows.push_back(to_json(*r.outcome));
        } else {
          rows.push_back({{"policy", std::string(to_string(r.policy))}, {"error", r.error}});
        }
      }
      body["baselines"] = std::move(rows);
    }
    if (with_curve) body["curve"] = downsample_curve(curve, config_.max_curve_points);
    body["dataset"] = dataset_summary(*ds);
    return {200, std::move(body)};
  } catch (const FieldError& e) {
    return error_response(400, e.message, e.field);
  } catch (const Json::exception& e) {
    return error_response(400, e.what());
  } catch (const Error& e) {
    return error_response(400, e.what());
  }
}

ApiResponse ScenarioService::sweep(const Json& req) const {
  try {
    std::vector<std::string> ids;
    if (req.contains("dataset_ids")) {
      const auto& v = req.at("dataset_ids");
      if (!v.is_array() || v.empty()) throw FieldError{"dataset_ids", "dataset_ids must be a non-empty array"};
      for (const auto& e : v) ids.push_back(e.get<std::string>());
    } else {
      const auto& v = require(req, "dataset_id");
      if (!v.is_string()) throw FieldError{"dataset_id", "dataset_id must be a string"};
      ids.push_back(v.get<std::string>());
    }
    SweepOptions options;
    options.grid_step = config_.grid_step;
    options.n_boot = 0;
    options.seed = config_.master_seed;
    options.weights.alphas = number_list(req, "alpha", options.weights.alphas, true);
    options.weights.betas = number_list(req, "beta", options.weights.betas, true);
    options.weights.gammas = number_list(req, "gamma", options.weights.gammas, true);
    options.capacities = number_list(req, "capacities", options.capacities, false);
    for (double c : options.capacities) capacity_value(c, "capacities");
    if (req.contains("n_boot")) {
      options.n_boot = unsigned_field(req, "n_boot");
    }
    if (req.contains("seed")) {
      options.seed = unsigned_field(req, "seed");
    }
    std::string scorer = "given";
    if (req.contains("scorer")) scorer = req.at("scorer").get<std::string>();

    const std::size_t cells = options.weights.cells() * options.capacities.size() * ids.size();
    if (cells > config_.max_sweep_cells) {
      return error_response(422, "sweep of " + std::to_string(cells) + " cells exceeds the budget of " +
                                     std::to_string(config_.max_sweep_cells));
    }
    std::vector<SweepInput> inputs;
    for (const auto& id : ids) {
      const auto ds = find(id);
      if (!ds) return error_response(404, "unknown dataset_id '" + id + "'", "dataset_id");
      inputs.push_back({ds->id, scorer, ds->validation, ds->test});
    }
    const auto records = factorial_sweep(inputs, options);
    return {200, to_json(records)};
  } catch (const FieldError& e) {
    return error_response(400, e.message, e.field);
  } catch (const Json::exception& e) {
    return error_response(400, e.what());
  } catch (const Error& e) {
    return error_response(400, e.what());
  }
}

void install_routes(httplib::Server& server, ScenarioService& service) {
  server.set_default_headers({
      {"Access-Control-Allow-Origin", service.config().cors_origin},
      {"Access-Control-Allow-Headers", "Content-Type"},
      {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
  });
  auto reply = [](httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  auto with_body = [reply](auto handler) {
    return [reply, handler](const httplib::Request& req, httplib::Response& res) {
      Json parsed = Json::parse(req.body, nullptr, false);
      if (parsed.is_discarded()) {
        reply(res, error_response(400, "request body is not valid JSON"));
        return;
      }
      reply(res, handler(parsed));
    };
  };

  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  server.Get("/health", [](const httplib::Request&, httplib::Response& res) { res.set_content("ok", "text/plain"); });
  server.Get("/api/datasets", [&service, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, service.list_datasets());
  });
  server.Post("/api/datasets", with_body([&service](const Json& j) { return service.add_dataset(j); }));
  server.Post("/api/evaluate", with_body([&service](const Json& j) { return service.evaluate(j); }));
  server.Post("/api/sweep", with_body([&service](const Json& j) { return service.sweep(j); }));
  server.set_exception_handler([reply](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    reply(res, error_response(500, what));
  });
}

}  // namespace capgate
