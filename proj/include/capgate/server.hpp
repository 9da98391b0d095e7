#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "json.hpp"

#include "capgate/core.hpp"
#include "capgate/optimizer.hpp"

namespace httplib {
class Server;
}

namespace capgate {

struct ServiceConfig {
  double grid_step = kDefaultGridStep;
  std::uint64_t master_seed = 42;
  std::size_t max_sweep_cells = 500;
  std::size_t max_curve_points = 512;
  std::string cors_origin = "*";
};

/// A dataset frozen at registration: calibration happens on `validation`,
/// evaluation on `test`, and requests cannot remix the two.
struct RegisteredDataset {
  std::string id;
  ScoredDataset full;
  ScoredDataset validation;
  ScoredDataset test;
  ThresholdGrid grid;
  LossCurve metric_curve;  // validation metrics on `grid`, reweighted per request
};

struct ApiResponse {
  int status = 200;
  nlohmann::ordered_json body;
};

/// Transport-independent request handling behind the HTTP routes.
class ScenarioService {
 public:
  explicit ScenarioService(ServiceConfig config = {});

  const ServiceConfig& config() const noexcept { return config_; }

  /// Registers explicit slices. Throws InvalidArgument on a duplicate id.
  void register_dataset(const std::string& id, ScoredDataset full, ScoredDataset validation,
                        ScoredDataset test);
  /// Registers a full dataset, split 50/20/30 with `split_seed`.
  void register_split(const std::string& id, const ScoredDataset& full, std::uint64_t split_seed = 42);

  std::shared_ptr<const RegisteredDataset> find(const std::string& id) const;

  ApiResponse list_datasets() const;
  ApiResponse add_dataset(const nlohmann::json& request);
  ApiResponse evaluate(const nlohmann::json& request) const;
  ApiResponse sweep(const nlohmann::json& request) const;

 private:
  ServiceConfig config_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<const RegisteredDataset>> datasets_;
};

nlohmann::ordered_json dataset_summary(const RegisteredDataset& dataset);

/// Binds the service's routes onto an httplib server:
/// GET /health, GET/POST /api/datasets, POST /api/evaluate, POST /api/sweep.
void install_routes(httplib::Server& server, ScenarioService& service);

}  // namespace capgate
